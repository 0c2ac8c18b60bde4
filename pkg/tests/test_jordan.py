import numpy as np
import pytest

from susyj import darboux as dx
from susyj import funcalc as fc
from susyj import jordan as jd
from susyj import operators as op
from susyj.errors import DegenerateTransform, NotInvariantSubspace

from conftest import FREE, rank2_pieces, two_level_pieces

GRID = op.GridSpec(-10, 10, 401)


def test_smatrix_rank2_is_bidiagonal():
    alpha = 1.0
    basis, _, _, _ = rank2_pieces(alpha=alpha)
    s = jd.build_smatrix(FREE, basis, GRID)
    expected = np.array([[-alpha ** 2, 0.0], [1.0, -alpha ** 2]], dtype=complex)
    assert np.abs(s.matrix - expected).max() < 1e-8
    assert s.fit_residual < 1e-9


def test_smatrix_single_eigenfunction():
    lam = -1.69
    basis = dx.TransformationBasis([dx.BasisEntry(fc.cosh(1.3 * fc.X), lam)], FREE)
    s = jd.build_smatrix(FREE, basis, GRID)
    assert s.matrix.shape == (1, 1)
    assert abs(s.matrix[0, 0] - lam) < 1e-10


def test_smatrix_two_level_is_diagonal():
    alpha, beta = 1.0, 0.3
    basis, _ = two_level_pieces(alpha=alpha, beta=beta)
    s = jd.build_smatrix(FREE, basis, GRID)
    expected = np.diag([-(alpha + beta) ** 2, -(alpha - beta) ** 2]).astype(complex)
    assert np.abs(s.matrix - expected).max() < 1e-8


def test_smatrix_rejects_non_invariant_span():
    basis = dx.TransformationBasis(
        [dx.BasisEntry(fc.exp(fc.mul(fc.const(-1.0), fc.powi(fc.X, 2))), 0.0)], FREE)
    with pytest.raises(NotInvariantSubspace):
        jd.build_smatrix(FREE, basis, op.GridSpec(-6, 6, 301))


def test_jordan_form_diagonal():
    js = jd.jordan_form(np.diag([1.0, 2.0, 3.0]).astype(complex))
    assert sorted(k for _, k in js.cells) == [1, 1, 1]
    assert js.form_residual < 1e-10


def test_jordan_form_single_cell():
    lam = -1.0 + 0.3j
    m = np.array([[lam, 0], [1, lam]], dtype=complex)
    js = jd.jordan_form(m)
    assert len(js.cells) == 1
    ev, k = js.cells[0]
    assert k == 2
    assert abs(ev - lam) < 1e-10
    j = js.transform @ m @ np.linalg.inv(js.transform)
    assert np.abs(j - np.array([[lam, 0], [1, lam]])).max() < 1e-9


def test_jordan_form_recovers_random_structure(rng):
    # construct-then-recover oracle: assemble Omega J Omega^{-1} with known J
    cell_spec = [(-1.0 + 0.5j, 2), (0.7 - 0.2j, 1), (-1.0 + 0.5j, 1)]
    j = np.zeros((4, 4), dtype=complex)
    pos = 0
    for lam, k in cell_spec:
        for i in range(k):
            j[pos + i, pos + i] = lam
            if i + 1 < k:
                j[pos + i + 1, pos + i] = 1.0
        pos += k
    for _ in range(5):
        while True:
            omega = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            if np.linalg.cond(omega) < 1e3:
                break
        m = omega @ j @ np.linalg.inv(omega)
        js = jd.jordan_form(m)
        got = sorted((round(ev.real, 6), round(ev.imag, 6), k) for ev, k in js.cells)
        want = sorted((round(l.real, 6), round(l.imag, 6), k) for l, k in cell_spec)
        assert got == want
        assert js.form_residual < 1e-6


def test_jordan_form_from_smatrix_idempotent_on_canonical_chain():
    basis, _, _, _ = rank2_pieces()
    s = jd.build_smatrix(FREE, basis, GRID)
    js = jd.jordan_form(s)
    assert len(js.cells) == 1
    assert js.cells[0][1] == 2
    assert abs(js.cells[0][0] + 1.0) < 1e-8


def test_rejects_three_cells_same_eigenvalue():
    m = np.diag([2.0, 2.0, 2.0]).astype(complex)
    with pytest.raises(ValueError):
        jd.jordan_form(m)


def test_strip_off_single_pairless_cell():
    js = jd.jordan_form(np.array([[-1.0, 0], [1, -1.0]], dtype=complex))
    rep = jd.strip_off_analysis(js)
    assert rep.pairs == ()
    assert rep.reduced_order == 2


def test_strip_off_detects_pair():
    lam = -2.0 + 0j
    cells = [(lam, 3), (lam, 1), (1.0 + 0j, 1)]
    m = np.zeros((5, 5), dtype=complex)
    pos = 0
    for ev, k in cells:
        for i in range(k):
            m[pos + i, pos + i] = ev
            if i + 1 < k:
                m[pos + i + 1, pos + i] = 1.0
        pos += k
    js = jd.jordan_form(m)
    rep = jd.strip_off_analysis(js)
    assert len(rep.pairs) == 1
    assert rep.pairs[0][1] == 1  # delta k = size of the smaller cell
    assert rep.reduced_order == 5 - 2


def test_susy_polynomial_rank2():
    alpha = 1.0
    basis, _, _, _ = rank2_pieces(alpha=alpha)
    js = jd.jordan_form(jd.build_smatrix(FREE, basis, GRID))
    coeffs = jd.susy_polynomial(js)
    # (E + alpha^2)^2 = E^2 + 2 alpha^2 E + alpha^4
    assert np.allclose(coeffs, [1.0, 2 * alpha ** 2, alpha ** 4], atol=1e-7)


def test_susy_polynomial_two_level():
    alpha, beta = 1.0, 0.3
    basis, _ = two_level_pieces(alpha=alpha, beta=beta)
    js = jd.jordan_form(jd.build_smatrix(FREE, basis, GRID))
    coeffs = jd.susy_polynomial(js)
    expected = np.convolve([1.0, (alpha + beta) ** 2], [1.0, (alpha - beta) ** 2])
    assert np.allclose(coeffs, expected, atol=1e-7)


def test_closure_on_plane_waves():
    # q+ after q- acting on e^{ikx} multiplies it by P(k^2) = (k^2 + alpha^2)^2
    alpha = 1.0
    basis, _, _, _ = rank2_pieces(alpha=alpha)
    q = dx.intertwiner(basis, GRID)
    qt = q.transpose()
    js = jd.jordan_form(jd.build_smatrix(FREE, basis, GRID))
    coeffs = jd.susy_polynomial(js)
    xs = np.linspace(-8, 8, 201)
    for k in (0.5, 1.0, 2.0):
        wave = fc.exp(fc.mul(fc.const(1j * k), fc.X))
        lhs = qt.apply(q.apply(wave)).values(xs)
        factor = jd.polynomial_in_energy(coeffs, k * k)
        rhs = factor * wave.values(xs)
        assert np.max(np.abs(lhs - rhs) / (1 + np.abs(rhs))) < 1e-7


def test_susy_polynomial_invariant_under_triangle_transform():
    basis, _, _, _ = rank2_pieces()
    chain = basis.chains()[0]
    moved = jd.triangle_transform(chain, [1.0, 0.7 - 0.2j])
    moved_basis = dx.TransformationBasis(
        [dx.BasisEntry(moved.functions[0], chain.eigenvalue, 0),
         dx.BasisEntry(moved.functions[1], chain.eigenvalue, 1)], FREE)
    js0 = jd.jordan_form(jd.build_smatrix(FREE, basis, GRID))
    js1 = jd.jordan_form(jd.build_smatrix(FREE, moved_basis, GRID))
    assert np.allclose(jd.susy_polynomial(js0), jd.susy_polynomial(js1), atol=1e-7)


def test_triangle_transform_identity():
    basis, _, phi0, phi1 = rank2_pieces()
    chain = basis.chains()[0]
    out = jd.triangle_transform(chain, [1.0])
    xs = np.linspace(-5, 5, 50)
    assert np.allclose(out.functions[1].values(xs), phi1.values(xs))


def test_triangle_transform_preserves_chain_relations():
    basis, _, phi0, _ = rank2_pieces()
    chain = basis.chains()[0]
    out = jd.triangle_transform(chain, [1.0, 0.31 + 0.4j])
    assert op.chain_residual(FREE, out, GRID) < 1e-9


def test_triangle_transform_rejects_zero_leading():
    basis, _, _, _ = rank2_pieces()
    with pytest.raises(DegenerateTransform):
        jd.triangle_transform(basis.chains()[0], [0.0, 1.0])


def test_triangle_transform_renormalizes_binorm():
    # scale a unit-binorm chain by c, then pick alphas restoring the binorm
    from susyj import models as md
    from susyj import quadrature as qd
    bundle = md.model_rank2(1.0, 0.0, 0.5j)
    c = 2.0 - 0.5j
    scaled = jd.triangle_transform(bundle.chains_minus[0], [c])
    v, _ = qd.binorm_integral(scaled.functions[0], scaled.functions[1])
    assert abs(v - c * c) < 1e-6
    restored = jd.triangle_transform(scaled, [1.0 / c])
    v2, _ = qd.binorm_integral(restored.functions[0], restored.functions[1])
    assert abs(v2 - 1.0) < 1e-6


def test_conjugate_triangle_matrix_restores_biorthogonality():
    alphas = [1.3 + 0.2j, -0.4j]
    m = jd.triangle_matrix(alphas, 2)
    b = jd.conjugate_triangle_matrix(alphas, 2)
    assert np.allclose(b.conj().T @ m, np.eye(2))
