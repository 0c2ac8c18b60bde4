"""Acceptance criteria, one test per criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  Tolerances are fixed here and match the package defaults.
"""

import time

import numpy as np
import pytest

from susyj import darboux as dx
from susyj import funcalc as fc
from susyj import index as ix
from susyj import jordan as jd
from susyj import models as md
from susyj import operators as op
from susyj import quadrature as qd

from conftest import random_expression, fd_derivative

ALPHA, X0, Z = 1.0, 0.0, 0.5j

_t_module_start = time.monotonic()


def _verdict(number, ok, detail):
    line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def rank2():
    return md.model_rank2(ALPHA, X0, Z)


@pytest.fixture(scope="module")
def threshold():
    return md.model_inverse_square(1j, 1)


def test_criterion_1_intertwining(rank2):
    t0 = time.monotonic()
    probes = op.default_probes()
    r = op.intertwining_residual(rank2.h_plus, rank2.h_minus, rank2.q_minus,
                                 probes, rank2.grid)
    dt = time.monotonic() - t0
    _verdict(1, r < 1e-8 and dt < 1.0,
             f"intertwining residual {r:.2e} (tol 1e-8), {dt:.2f}s (limit 1s)")


def test_criterion_2_jordan_chain(rank2):
    t0 = time.monotonic()
    chain = rank2.chains_minus[0]
    r = op.chain_residual(rank2.h_minus, chain, rank2.grid)
    dt = time.monotonic() - t0
    _verdict(2, r < 1e-9 and dt < 1.0,
             f"cell chain residual {r:.2e} (tol 1e-9), {dt:.2f}s (limit 1s)")


def test_criterion_3_binorm_table(rank2):
    t0 = time.monotonic()
    phi0, phi1 = [e.function for e in rank2.kernel_plus.entries]
    v00, _ = qd.binorm_integral(phi0, phi0)
    v11, _ = qd.binorm_integral(phi1, phi1)
    v01, _ = qd.binorm_integral(phi0, phi1)
    dt = time.monotonic() - t0
    ok = abs(v00) < 1e-8 and abs(v11) < 1e-8 and abs(v01 - 1) < 1e-6 and dt < 5.0
    _verdict(3, ok, f"self binorms {abs(v00):.1e}/{abs(v11):.1e} (tol 1e-8), "
                    f"cross {v01.real:+.8f} (target 1 tol 1e-6), {dt:.2f}s (limit 5s)")


def test_criterion_4_two_level_binorm_formula():
    worst = 0.0
    magnitudes = []
    for beta in (0.1, 0.3, 0.5):
        b = md.model_two_level(ALPHA, beta, X0, Z)
        for entry, target in ((b.kernel_plus.entries[0],
                               -beta / (2 * ALPHA * (ALPHA + beta))),
                              (b.kernel_plus.entries[1],
                               +beta / (2 * ALPHA * (ALPHA - beta)))):
            v, _ = qd.binorm_integral(entry.function, entry.function)
            worst = max(worst, abs(v - target))
        magnitudes.append(abs(target))
    shrink = magnitudes[0] < magnitudes[1] < magnitudes[2]
    _verdict(4, worst < 1e-6 and shrink,
             f"formula deviation {worst:.2e} (tol 1e-6), binorms shrink toward "
             f"the confluent zero: {shrink}")


def test_criterion_5_smatrix_and_polynomial(rank2):
    s = jd.build_smatrix(rank2.h_plus, rank2.kernel_minus, rank2.grid)
    expected = np.array([[-ALPHA ** 2, 0.0], [1.0, -ALPHA ** 2]], dtype=complex)
    dev = float(np.abs(s.matrix - expected).max())
    xs = np.linspace(-6, 6, 101)
    worst = 0.0
    for k in (0.5, 1.0, 2.0):
        wave = fc.exp(fc.mul(fc.const(1j * k), fc.X))
        lhs = rank2.q_plus.apply_values(rank2.q_minus.apply(wave), xs)
        rhs = (k * k + ALPHA ** 2) ** 2 * wave.values(xs)
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.abs(rhs))))
    _verdict(5, dev < 1e-8 and worst < 1e-7,
             f"S-matrix deviation {dev:.2e} (tol 1e-8), closure residual "
             f"{worst:.2e} (tol 1e-7) at k in 0.5/1/2")


def test_criterion_6_index_theorem(rank2):
    t0 = time.monotonic()
    c = ix.census(rank2, -ALPHA ** 2)
    counts = (c.k_i, c.k_up_plus, c.k_down_plus, c.k_up_minus, c.k_down_minus,
              c.nu_minus, c.n_minus, c.n_zero, c.nu_plus, c.n_plus)
    expected = (2, 0, 0, 2, 2, 2, 2, 0, 0, 0)
    verdict = ix.index_theorem_check(c)
    counting = ix.kernel_counting_check(c)
    dt = time.monotonic() - t0
    ok = counts == expected and verdict.holds and counting and dt < 10.0
    _verdict(6, ok, f"census {counts} == {expected}, index theorem "
                    f"{verdict.holds}, kernel counting {counting}, "
                    f"{dt:.2f}s (limit 10s)")


def test_criterion_7_confluence(rank2):
    xs = rank2.grid.points()
    target = rank2.kernel_minus.entries[1].function.values(xs)
    exact = md.confluence_limit(ALPHA, X0, Z)
    d_exact = float(np.max(np.abs(exact.functions[1].values(xs) - target)
                           / (1 + np.abs(target))))
    fd = md.confluence_fd_chain(ALPHA, X0, Z, betas=(1e-2, 1e-3))
    d_fd = float(np.max(np.abs(fd.functions[1].values(xs) - target)
                        / (1 + np.abs(target))))
    pairs = [(-2.0, 1.0), (0.5, 0.5), (1.5, -2.5), (3.0, 0.0), (-1.0, -1.0),
             (2.0, 2.0), (-3.0, 1.5), (0.0, 1.0), (1.0, -0.5), (-0.5, 2.5)]
    d_dyad = md.confluence_dyad_limit(ALPHA, X0, Z, pairs)
    ok = d_exact < 1e-9 and d_fd < 1e-6 and d_dyad < 1e-5
    _verdict(7, ok, f"exact route {d_exact:.2e} (tol 1e-9), finite-difference "
                    f"route {d_fd:.2e} (tol 1e-6), dyad limit {d_dyad:.2e} (tol 1e-5)")


def test_criterion_8_symmetry_operator(rank2):
    rep = md.symmetry_check(rank2, k_values=(0.7, 1.3))
    anti_ok = op.operators_equal(rank2.symmetry_op.transpose(),
                                 -rank2.symmetry_op, rtol=1e-9)
    ok = (rep.max_eigenvalue_residual < 1e-7
          and max(rep.zero_mode_residuals) < 1e-8
          and anti_ok)
    _verdict(8, ok, f"eigenvalue residual {rep.max_eigenvalue_residual:.2e} "
                    f"(tol 1e-7), zero modes {max(rep.zero_mode_residuals):.2e} "
                    f"(tol 1e-8), antisymmetric at expression tolerance: {anti_ok}")


def test_criterion_9_threshold_resolution(threshold):
    t0 = time.monotonic()
    psi0 = threshold.kernel_plus.entries[0].function
    v, _ = qd.binorm_integral(psi0, psi0)
    rep_m = md.resolution_of_identity(threshold, [psi0], variant="modified",
                                      eps_seq=(0.1, 0.05, 0.025), strict=False)
    rep_c = md.resolution_of_identity(threshold, [psi0], variant="counterterm",
                                      eps_seq=(0.1, 0.05, 0.025), strict=False)
    norm = float(np.abs(psi0.values(np.linspace(-6, 6, 121))).max())
    dt = time.monotonic() - t0
    ok = (abs(v) < 1e-8
          and rep_m.results[0].extrapolated_error < 1e-3
          and rep_c.results[0].extrapolated_error > 0.5 * norm
          and dt < 60.0)
    _verdict(9, ok, f"zero binorm {abs(v):.1e} (tol 1e-8), modified variant "
                    f"error {rep_m.results[0].extrapolated_error:.2e} (tol 1e-3), "
                    f"plain counterterm error {rep_c.results[0].extrapolated_error:.2f} "
                    f"> {0.5 * norm:.2f} as predicted, {dt:.1f}s (limit 60s)")


def test_criterion_10_property_suite(rank2, rng):
    # (a) symbolic derivatives against finite differences, 100 random expressions
    checked = 0
    worst_fd = 0.0
    while checked < 100:
        f = random_expression(rng, depth=int(rng.integers(2, 6)))
        x = float(rng.uniform(-3, 3))
        try:
            d = fc.evaluate(f, x, order=1)[1]
            oracle = fd_derivative(f, x, 1)
        except Exception:
            continue
        worst_fd = max(worst_fd, abs(d - oracle) / (1 + abs(oracle)))
        checked += 1
    ok_fd = worst_fd < 1e-6

    # (b) transpose anti-homomorphism through the quadrature pairing, 20 pairs
    nodes, weights = np.polynomial.legendre.leggauss(12)
    edges = np.linspace(-10, 10, 61)

    def pair_quad(h):
        total = 0j
        for lo, hi in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            total += half * np.sum(weights * h.values(mid + half * nodes))
        return total

    def damped(expr):
        return fc.mul(expr, fc.exp(fc.mul(fc.const(-0.5), fc.powi(fc.X, 2))))

    worst_pair = 0.0
    for _ in range(20):
        a = op.DiffOperator([random_expression(rng, 2), fc.const(1.0)])
        b = op.DiffOperator([random_expression(rng, 2),
                             random_expression(rng, 1), fc.const(1.0)])
        fprobe = damped(random_expression(rng, 2))
        gprobe = damped(random_expression(rng, 2))
        ab = a.compose(b)
        lhs = pair_quad(fc.mul(ab.apply(fprobe), gprobe))
        rhs = pair_quad(fc.mul(fprobe,
                               b.transpose().compose(a.transpose()).apply(gprobe)))
        worst_pair = max(worst_pair, abs(lhs - rhs) / (1 + abs(lhs)))
    ok_pair = worst_pair < 1e-7

    # (c) binorm anti-diagonal pattern on every built-in normalizable chain
    ok_pattern = True
    two_level = md.model_two_level(ALPHA, 0.3, X0, Z)
    threshold = md.model_inverse_square(1j, 1)
    for bundle in (rank2, two_level, threshold):
        for chain in bundle.chains_minus:
            bm = qd.biorthogonality_matrix(chain)
            ok_pattern = ok_pattern and bm.pattern_violation < 1e-8 \
                and bm.antidiagonal_spread < 1e-6

    # (d) PT preservation in the x0 = Re z = 0 configurations
    ok_pt = True
    for bundle in (rank2, two_level):
        xs = bundle.grid.points()
        v = bundle.h_minus.potential
        defect = np.abs(np.conj(v.values(-xs)) - v.values(xs)) / (1 + np.abs(v.values(xs)))
        ok_pt = ok_pt and float(defect.max()) < 1e-9

    ok = ok_fd and ok_pair and ok_pattern and ok_pt
    _verdict(10, ok, f"derivative-vs-FD worst {worst_fd:.2e} (tol 1e-6), "
                     f"pairing worst {worst_pair:.2e} (tol 1e-7), binorm "
                     f"patterns: {ok_pattern}, PT preservation: {ok_pt}")


def test_acceptance_module_runtime():
    dt = time.monotonic() - _t_module_start
    line = f"ACCEPTANCE runtime: {dt:.0f}s for this module (budget 300s)"
    print(line)
    assert dt < 300.0, line
