"""Darboux-Crum partner Hamiltonians for complex one-dimensional potentials.

Construction and desk-scale numerical verification of intertwined Hamiltonian
pairs, their Jordan-cell bound-state sectors, biorthogonality relations,
normalizability bookkeeping, and regularized resolutions of identity.
"""

__version__ = "0.1.0"

from . import darboux, funcalc, index, jordan, models, operators, quadrature  # noqa: F401
from .errors import SusyjError  # noqa: F401
