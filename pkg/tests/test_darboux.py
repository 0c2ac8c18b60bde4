import numpy as np
import pytest

from susyj import darboux as dx
from susyj import funcalc as fc
from susyj import operators as op
from susyj.errors import SingularPartner

from conftest import FREE, rank2_pieces, two_level_pieces

GRID = op.GridSpec(-10, 10, 401)


def test_single_entry_wronskian_is_the_entry():
    alpha, x0 = 1.1, 0.2
    f = fc.cosh(alpha * (fc.X - x0))
    basis = dx.TransformationBasis([dx.BasisEntry(f, -alpha * alpha)], FREE)
    assert fc.equal_numeric(dx.crum_wronskian(basis, 1), f, -6, 6)


def test_rank2_wronskian_closed_form():
    alpha = 1.0
    basis, w_fn, _, _ = rank2_pieces(alpha=alpha)
    w2 = dx.crum_wronskian(basis, 2)
    expected = fc.mul(fc.const(-1 / (4 * alpha)), w_fn)
    assert fc.equal_numeric(w2, expected, -8, 8)


def test_two_level_wronskian_closed_form():
    # Wronskian of the two cosh entries equals -beta * W(x) in this row order
    beta = 0.3
    basis, w_fn = two_level_pieces(beta=beta)
    w2 = dx.crum_wronskian(basis, 2)
    expected = fc.mul(fc.const(-beta), w_fn)
    assert fc.equal_numeric(w2, expected, -8, 8)


def test_partner_single_soliton_well():
    alpha, x0 = 1.0, 0.3
    f = fc.cosh(alpha * (fc.X - x0))
    basis = dx.TransformationBasis([dx.BasisEntry(f, -alpha * alpha)], FREE)
    v2 = dx.partner_potential(fc.const(0.0), basis, GRID)
    expected = fc.quot(fc.const(-2 * alpha * alpha), fc.powi(fc.cosh(alpha * (fc.X - x0)), 2))
    assert fc.equal_numeric(v2, expected, -8, 8)


def test_partner_rank2_closed_form():
    alpha, x0, z = 1.0, 0.0, 0.5j
    basis, w_fn, _, _ = rank2_pieces(alpha, x0, z)
    v2 = dx.partner_potential(fc.const(0.0), basis, GRID)
    xi = fc.X - x0
    num = fc.add(fc.mul(fc.const(alpha), fc.X - z, fc.sinh(2 * alpha * xi)),
                 fc.mul(fc.const(-2.0), fc.powi(fc.cosh(alpha * xi), 2)))
    expected = fc.mul(fc.const(-16 * alpha ** 2), fc.quot(num, fc.powi(w_fn, 2)))
    xs = GRID.points()
    diff = np.abs(v2.values(xs) - expected.values(xs)) / (1 + np.abs(expected.values(xs)))
    assert diff.max() < 1e-9


def test_partner_with_constant_wronskian_is_identity():
    alpha = 0.8
    basis = dx.TransformationBasis(
        [dx.BasisEntry(fc.cosh(alpha * fc.X), -alpha ** 2, 0),
         dx.BasisEntry(fc.sinh(alpha * fc.X), -alpha ** 2, 0)], FREE)
    v1 = fc.const(0.25)
    v2 = dx.partner_potential(v1, basis, GRID)
    assert fc.equal_numeric(v2, v1, -6, 6)


def test_singular_partner_detected():
    basis = dx.TransformationBasis([dx.BasisEntry(fc.sinh(fc.X), -1.0)], FREE)
    with pytest.raises(SingularPartner):
        dx.partner_potential(fc.const(0.0), basis, GRID)


def test_superpotential_single_soliton():
    alpha, x0 = 1.0, 0.3
    f = fc.cosh(alpha * (fc.X - x0))
    basis = dx.TransformationBasis([dx.BasisEntry(f, -alpha * alpha)], FREE)
    chi = dx.superpotentials(basis, GRID)[0]
    expected = fc.mul(fc.const(-alpha), fc.tanh(alpha * (fc.X - x0)))
    assert fc.equal_numeric(chi, expected, -8, 8)


def test_superpotential_rank2_second_factor():
    alpha = 1.0
    basis, w_fn, _, _ = rank2_pieces(alpha=alpha)
    chis = dx.superpotentials(basis, GRID)
    expected = fc.add(fc.mul(fc.const(-1.0), fc.quot(w_fn.derivative(), w_fn)),
                      fc.mul(fc.const(alpha), fc.tanh(alpha * fc.X)))
    assert fc.equal_numeric(chis[1], expected, -8, 8)


def test_superpotential_telescoping():
    basis, _, _, _ = rank2_pieces()
    chis = dx.superpotentials(basis, GRID)
    total = fc.add(*(fc.mul(fc.const(2.0), chi.derivative()) for chi in chis))
    w = dx.crum_wronskian(basis, 2)
    dw, ddw = w.derivative(), w.derivative().derivative()
    rhs = fc.mul(fc.const(-2.0),
                 fc.quot(fc.add(fc.mul(ddw, w), fc.mul(fc.const(-1.0), fc.powi(dw, 2))),
                         fc.powi(w, 2)))
    assert fc.equal_numeric(total, rhs, -8, 8)


def test_intertwiner_single_soliton():
    alpha, x0 = 1.0, 0.3
    f = fc.cosh(alpha * (fc.X - x0))
    basis = dx.TransformationBasis([dx.BasisEntry(f, -alpha * alpha)], FREE)
    q = dx.intertwiner(basis, GRID)
    expected = op.DiffOperator((fc.mul(fc.const(-alpha), fc.tanh(alpha * (fc.X - x0))),
                                fc.const(1.0)))
    assert op.operators_equal(q, expected, -8, 8)


def test_intertwiner_rank2_closed_form():
    alpha = 1.0
    basis, w_fn, _, _ = rank2_pieces(alpha=alpha)
    q = dx.intertwiner(basis, GRID)
    w0 = fc.add(fc.const(-alpha * alpha),
                fc.mul(fc.const(0.5), fc.quot(w_fn.derivative().derivative(), w_fn)))
    w1 = fc.mul(fc.const(-1.0), fc.quot(w_fn.derivative(), w_fn))
    expected = op.DiffOperator((w0, w1, fc.const(1.0)))
    assert op.operators_equal(q, expected, -8, 8)


def test_intertwiner_two_level_closed_form():
    alpha, beta = 1.0, 0.3
    basis, w_fn = two_level_pieces(alpha=alpha, beta=beta)
    q = dx.intertwiner(basis, GRID)
    w0 = fc.add(fc.const(-(alpha ** 2 + beta ** 2)),
                fc.mul(fc.const(0.5), fc.quot(w_fn.derivative().derivative(), w_fn)))
    w1 = fc.mul(fc.const(-1.0), fc.quot(w_fn.derivative(), w_fn))
    expected = op.DiffOperator((w0, w1, fc.const(1.0)))
    assert op.operators_equal(q, expected, -8, 8)


def test_intertwiner_annihilates_basis():
    basis, _, _, _ = rank2_pieces()
    q = dx.intertwiner(basis, GRID)
    for e in basis.entries:
        assert op.annihilation_residual(q, e.function, GRID) < 1e-9


def test_intertwining_relation_with_partner():
    basis, _, _, _ = rank2_pieces()
    q = dx.intertwiner(basis, GRID)
    v2 = dx.partner_potential(fc.const(0.0), basis, GRID)
    r = op.intertwining_residual(FREE, op.Hamiltonian(v2), q, op.default_probes(), GRID)
    assert r < 1e-8


def test_ladder_rank2_intermediate_and_composition():
    alpha = 1.0
    basis, _, _, _ = rank2_pieces(alpha=alpha)
    lad = dx.ladder(basis, GRID)
    assert lad.cross_check_residual < 1e-9
    h1_expected = fc.quot(fc.const(-2 * alpha ** 2), fc.powi(fc.cosh(alpha * fc.X), 2))
    assert fc.equal_numeric(lad.intermediates[1].potential, h1_expected, -8, 8)
    # composing the factors reproduces the intertwiner
    assert op.operators_equal(lad.composed(), dx.intertwiner(basis, GRID), -8, 8, rtol=1e-8)
    # final rung agrees with the partner potential
    v2 = dx.partner_potential(fc.const(0.0), basis, GRID)
    assert fc.equal_numeric(lad.intermediates[2].potential, v2, -8, 8, rtol=1e-8)


def test_ladder_single_entry():
    alpha = 0.9
    f = fc.cosh(alpha * fc.X)
    basis = dx.TransformationBasis([dx.BasisEntry(f, -alpha * alpha)], FREE)
    lad = dx.ladder(basis, GRID)
    assert len(lad.factors) == 1
    assert fc.equal_numeric(lad.intermediates[0].potential, fc.const(0.0), -6, 6)
    v2 = dx.partner_potential(fc.const(0.0), basis, GRID)
    assert fc.equal_numeric(lad.intermediates[1].potential, v2, -6, 6)


def test_ladder_dual_formulas_on_random_two_entry_bases(rng):
    for _ in range(5):
        a1 = rng.uniform(0.6, 1.4)
        a2 = a1 + rng.uniform(0.2, 0.8)
        x1, x2 = rng.uniform(-0.5, 0.5, size=2)
        z_im = rng.uniform(0.3, 0.8)
        basis = dx.TransformationBasis(
            [dx.BasisEntry(fc.cosh(a1 * (fc.X - x1)), -a1 * a1, 0),
             dx.BasisEntry(fc.cosh(a2 * (fc.X - (x2 + z_im * 1j))), -a2 * a2, 0)],
            FREE)
        lad = dx.ladder(basis, GRID)
        assert lad.cross_check_residual < 1e-9


def test_ratio_identity_first_factor():
    # r_1 applied to the second entry equals w_2 / w_1
    basis, _, _, _ = rank2_pieces()
    lad = dx.ladder(basis, GRID)
    lhs = lad.factors[0].apply(basis.entries[1].function)
    rhs = fc.quot(dx.crum_wronskian(basis, 2), dx.crum_wronskian(basis, 1))
    assert fc.equal_numeric(lhs, rhs, -8, 8)


def test_partner_kernel_functions_annihilated_by_transpose():
    basis, _, _, _ = rank2_pieces()
    qt = dx.intertwiner(basis, GRID).transpose()
    for g in dx.partner_kernel_functions(basis, GRID):
        assert op.annihilation_residual(qt, g, GRID) < 1e-9


def test_pt_preservation_in_symmetric_configuration():
    # x0 = Re z = 0: entries are PT-even/odd, so the partner stays PT-symmetric
    basis, _, phi0, phi1 = rank2_pieces(alpha=1.0, x0=0.0, z=0.5j)
    assert dx.pt_symmetry_defect(phi0, GRID) < 1e-10
    assert dx.pt_symmetry_defect(phi1, GRID) < 1e-10
    v2 = dx.partner_potential(fc.const(0.0), basis, GRID)
    xs = GRID.points()
    defect = np.abs(np.conj(v2.values(-xs)) - v2.values(xs)) / (1 + np.abs(v2.values(xs)))
    assert defect.max() < 1e-9


def test_basis_chain_validation_and_json_roundtrip():
    basis, _, _, _ = rank2_pieces()
    assert basis.validate(GRID) < 1e-9
    restored = dx.TransformationBasis.from_json(basis.to_json(), FREE)
    assert restored.validate(GRID) < 1e-9
    assert restored.entries[1].chain_position == 1
