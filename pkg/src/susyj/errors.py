"""Exception types shared across the package."""


class SusyjError(Exception):
    """Base class for all errors raised by this package."""


class PoleProximity(SusyjError):
    """Evaluation point too close to a zero of a quotient denominator."""

    def __init__(self, x, magnitude):
        super().__init__(f"denominator magnitude {magnitude:.3e} near x={x}")
        self.x = x
        self.magnitude = magnitude


class UnknownParameter(SusyjError):
    """A named parameter is absent from the expression."""


class SingularPartner(SusyjError):
    """The top Wronskian vanishes on the working grid."""


class SingularIntermediate(SusyjError):
    """An intermediate Wronskian of the ladder vanishes on the grid."""

    def __init__(self, j, message=None):
        super().__init__(message or f"intermediate Wronskian w_{j} vanishes on grid")
        self.j = j


class NotInvariantSubspace(SusyjError):
    """The candidate basis is not closed under the Hamiltonian."""


class IllConditioned(SusyjError):
    """Jordan-structure rank decisions are numerically ambiguous.

    Carries both candidate structures so the caller can inspect them.
    """

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = tuple(candidates)


class DegenerateTransform(SusyjError):
    """Triangle transformation with vanishing leading coefficient."""


class NonIntegrable(SusyjError):
    """Integrand grows at infinity; the integral does not exist."""


class TailUnbounded(SusyjError):
    """Decay too slow to reach the requested tolerance."""


class SlowConvergence(SusyjError):
    """Oscillatory damping failed to stabilize."""

    def __init__(self, message, achieved_error=None):
        super().__init__(message)
        self.achieved_error = achieved_error


class Inconclusive(SusyjError):
    """Normalizability classification unstable across probe windows."""


class IneligibleLevel(SusyjError):
    """Spectral value outside the proven class (real and positive)."""


class HypothesisUnmet(SusyjError):
    """A check was invoked with its hypothesis violated."""


class ParameterDomain(SusyjError):
    """Model parameters outside the admissible domain."""


class ExtrapolationUnstable(SusyjError):
    """Limit extrapolation results disagree beyond tolerance."""


class KappaMismatch(SusyjError):
    """No matching constant found in the triple-coalescence construction."""


class ClassMismatch(SusyjError):
    """Test function outside the declared class of a resolution variant."""


class ConfigError(SusyjError):
    """Malformed CLI or JSON configuration."""


class ModelError(SusyjError):
    """Model construction failed (wraps domain errors for the CLI)."""
