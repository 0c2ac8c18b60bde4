import numpy as np
import pytest

from susyj import darboux as dx
from susyj import funcalc as fc
from susyj import operators as op

FREE = op.Hamiltonian(fc.const(0.0))


def rank2_pieces(alpha=1.0, x0=0.0, z=0.5j):
    """Transformation pair for the rank-2 reflectionless construction:
    returns (basis, W, phi0, phi1) with W = sinh(2a(x-x0)) + 2a(x-z)."""
    xi = fc.X - x0
    phi0 = fc.cosh(alpha * xi)
    phi1 = fc.add(fc.mul(fc.const(-1 / (2 * alpha)), fc.X - z, fc.sinh(alpha * xi)),
                  fc.mul(fc.const(1 / (4 * alpha ** 2)), fc.cosh(alpha * xi)))
    w_fn = fc.add(fc.sinh(2 * alpha * xi), fc.mul(fc.const(2 * alpha), fc.X - z))
    basis = dx.TransformationBasis(
        [dx.BasisEntry(phi0, -alpha * alpha, 0), dx.BasisEntry(phi1, -alpha * alpha, 1)],
        FREE)
    return basis, w_fn, phi0, phi1


def two_level_pieces(alpha=1.0, beta=0.3, x0=0.0, z=0.5j):
    """Two-bound-state transformation pair (basis, W) for beta != 0."""
    kp, km = alpha + beta, alpha - beta
    xip = (alpha * x0 + beta * z) / kp
    xim = (alpha * x0 - beta * z) / km
    phip = fc.cosh(kp * (fc.X - xip))
    phim = fc.cosh(km * (fc.X - xim))
    w_fn = fc.add(fc.sinh(2 * alpha * (fc.X - x0)),
                  fc.mul(fc.const(alpha / beta), fc.sinh(2 * beta * (fc.X - z))))
    basis = dx.TransformationBasis(
        [dx.BasisEntry(phip, -kp * kp, 0), dx.BasisEntry(phim, -km * km, 0)], FREE)
    return basis, w_fn


def fd_derivative(f, x, order, params=None, h=None):
    """Five-point central finite differences, the independent oracle for
    symbolic derivatives.  Step sizes chosen near the optimum per order."""
    if h is None:
        h = {1: 1e-5, 2: 6e-4, 3: 7e-4}[order]
    v = [f.evaluate(x + m * h, params) for m in (-2, -1, 0, 1, 2)]
    if order == 1:
        return (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * h)
    if order == 2:
        return (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h)
    if order == 3:
        return (-v[0] + 2 * v[1] - 2 * v[3] + v[4]) / (2 * h ** 3)
    raise ValueError(order)


def random_expression(rng, depth=4, params=()):
    """Random expression over the supported node kinds.

    Arguments of exp/sinh/cosh are kept affine with small slopes so values on
    [-3, 3] stay well inside double range; quotient denominators are offset to
    keep clear of the real axis.
    """
    if depth == 0:
        kind = rng.integers(0, 3 if params else 2)
        if kind == 0:
            return fc.X
        if kind == 1:
            return fc.const(complex(rng.uniform(-2, 2), rng.uniform(-1, 1)))
        return fc.param(str(rng.choice(list(params))))
    kind = rng.integers(0, 8)
    sub = lambda: random_expression(rng, depth - 1, params)  # noqa: E731
    if kind == 0:
        return fc.add(sub(), sub())
    if kind == 1:
        return fc.mul(sub(), sub())
    if kind == 2:
        den = fc.add(sub(), fc.const(complex(0, rng.uniform(1.5, 3.0))))
        return fc.quot(sub(), den)
    if kind == 3:
        return fc.powi(sub(), int(rng.integers(2, 4)))
    affine = fc.add(fc.mul(fc.const(rng.uniform(-0.7, 0.7)), fc.X),
                    fc.const(complex(rng.uniform(-1, 1), rng.uniform(-0.5, 0.5))))
    if kind == 4:
        return fc.exp(affine)
    if kind == 5:
        return fc.sinh(affine)
    if kind == 6:
        return fc.cosh(affine)
    return fc.tanh(fc.add(sub(), fc.const(0.1)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
