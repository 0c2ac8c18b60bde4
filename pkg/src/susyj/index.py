"""Normalizability bookkeeping for intertwined partner pairs.

Counts, per spectral level: the cell size k of the induced matrix on the
intertwiner kernels, how many kernel members of either side are normalizable
at each infinity (with the canonical prefix structure verified), the
whole-axis counts n+/n-/n0, and the algebraic multiplicities nu+/nu- measured
from the bundle-supplied normalizable chains.  The index identity
nu+ - n+ = nu- - n- and the kernel-counting criterion are then checked
against the measured integers.  Levels sitting exactly at a continuum
threshold are reported as out of scope rather than pass/fail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import funcalc as fc
from . import jordan as jd
from . import quadrature as qd
from .errors import HypothesisUnmet, Inconclusive, IneligibleLevel
from .funcalc import FuncExpr


LEVEL_TOL = 1e-8


@dataclass(frozen=True)
class LevelCensus:
    eigenvalue: complex
    k_i: int
    k_up_plus: int      # phi- members (kernel of q-) normalizable at +inf
    k_down_plus: int    # ... at -inf
    k_up_minus: int     # phi+ members (kernel of q+) normalizable at +inf
    k_down_minus: int
    n_plus: int         # phi- members normalizable on the whole axis
    n_minus: int        # phi+ members normalizable on the whole axis
    n_zero: int         # members normalizable at exactly one end
    nu_plus: int        # whole-axis-normalizable chain length of h+ at the level
    nu_minus: int
    at_continuum_threshold: bool = False
    notes: tuple[str, ...] = ()

    def to_json_obj(self):
        lam = complex(self.eigenvalue)
        return {"lambda": {"re": lam.real, "im": lam.imag},
                "k": self.k_i,
                "k_up_plus": self.k_up_plus, "k_down_plus": self.k_down_plus,
                "k_up_minus": self.k_up_minus, "k_down_minus": self.k_down_minus,
                "n_plus": self.n_plus, "n_minus": self.n_minus, "n_zero": self.n_zero,
                "nu_plus": self.nu_plus, "nu_minus": self.nu_minus,
                "at_continuum_threshold": self.at_continuum_threshold,
                "notes": list(self.notes)}


@dataclass(frozen=True)
class IndexVerdict:
    in_scope: bool
    holds: bool | None
    strong_clause_applies: bool
    strong_clause_holds: bool | None

    def to_json_obj(self):
        return {"in_scope": self.in_scope, "holds": self.holds,
                "strong_clause_applies": self.strong_clause_applies,
                "strong_clause_holds": self.strong_clause_holds}


@dataclass(frozen=True)
class IndexReport:
    levels: tuple[LevelCensus, ...]
    index_verdicts: tuple[IndexVerdict, ...]
    counting_verdicts: tuple[bool | None, ...]  # None when the hypothesis fails

    @property
    def all_hold(self) -> bool:
        ok = all(v.holds for v in self.index_verdicts if v.in_scope)
        ok = ok and all(v is not False for v in self.counting_verdicts)
        return ok

    def to_json_obj(self):
        return {"levels": [c.to_json_obj() for c in self.levels],
                "index_theorem": [v.to_json_obj() for v in self.index_verdicts],
                "kernel_counting": list(self.counting_verdicts)}


def _eligible(lam: complex) -> bool:
    lam = complex(lam)
    return lam.imag != 0 or lam.real <= 0


def _members_at(basis, lam: complex):
    if basis is None:
        return []
    return [e.function for e in basis.entries
            if abs(complex(e.eigenvalue) - lam) <= LEVEL_TOL * (1 + abs(lam))]


def _whole_axis_flags(functions, probe) -> list[dict]:
    out = []
    for f in functions:
        plus = qd.classify(f, +1, probe)
        minus = qd.classify(f, -1, probe)
        out.append({"up": plus.normalizable, "down": minus.normalizable,
                    "borderline": plus.borderline or minus.borderline})
    return out


def _prefix_count(flags, key) -> int:
    count = 0
    for fl in flags:
        if fl[key]:
            count += 1
        else:
            break
    remainder_ok = all(not fl[key] for fl in flags[count:])
    if not remainder_ok:
        raise Inconclusive(
            "side-normalizable members do not form a chain prefix")
    return count


def census(bundle, lam: complex, probe: qd.ProbeSpec | None = None) -> LevelCensus:
    """Measured normalizability integers for one spectral level of a bundle."""
    lam = complex(lam)
    if not _eligible(lam):
        raise IneligibleLevel(
            f"lambda = {lam} is real positive, outside the proven class")
    probe = probe or qd.ProbeSpec()
    notes = []

    members_minus = _members_at(bundle.kernel_minus, lam)
    members_plus = _members_at(bundle.kernel_plus, lam)
    k_i = len(members_minus)
    if members_plus and len(members_plus) != k_i:
        notes.append("kernel cell sizes differ between the two intertwiners")

    if k_i and bundle.kernel_minus is not None:
        s_plus = jd.build_smatrix(bundle.h_plus, bundle.kernel_minus, bundle.grid)
        js = jd.jordan_form(s_plus)
        cells = js.cells_at(lam, tol=1e-6 * (1 + abs(lam)))
        if sum(k for _, k in cells) != k_i:
            notes.append("induced-matrix cell size disagrees with kernel grouping")

    flags_minus = _whole_axis_flags(members_minus, probe)
    flags_plus = _whole_axis_flags(members_plus, probe)
    if any(fl["borderline"] for fl in flags_minus + flags_plus):
        notes.append("borderline power-law decay among kernel members")

    k_up_plus = _prefix_count(flags_minus, "up")
    k_down_plus = _prefix_count(flags_minus, "down")
    k_up_minus = _prefix_count(flags_plus, "up")
    k_down_minus = _prefix_count(flags_plus, "down")

    n_plus = sum(1 for fl in flags_minus if fl["up"] and fl["down"])
    n_minus = sum(1 for fl in flags_plus if fl["up"] and fl["down"])
    n_zero = sum(1 for fl in flags_minus if fl["up"] != fl["down"])
    n_zero_dual = sum(1 for fl in flags_plus if fl["up"] != fl["down"])
    if members_plus and n_zero != n_zero_dual:
        notes.append("one-sided counts differ between the kernels")

    def chain_multiplicity(chains):
        best = 0
        for chain in chains:
            if abs(complex(chain.eigenvalue) - lam) > LEVEL_TOL * (1 + abs(lam)):
                continue
            flags = _whole_axis_flags(chain.functions, probe)
            count = 0
            for fl in flags:
                if fl["up"] and fl["down"]:
                    count += 1
                else:
                    break
            best = max(best, count)
        return best

    nu_minus = chain_multiplicity(bundle.chains_minus)
    nu_plus = chain_multiplicity(bundle.chains_plus)

    at_threshold = (bundle.continuum_threshold is not None
                    and abs(lam - bundle.continuum_threshold) <= LEVEL_TOL)
    return LevelCensus(lam, k_i, k_up_plus, k_down_plus, k_up_minus, k_down_minus,
                       n_plus, n_minus, n_zero, nu_plus, nu_minus,
                       at_threshold, tuple(notes))


def index_theorem_check(c: LevelCensus) -> IndexVerdict:
    """Per-level identity nu+ - n+ = nu- - n-, with the one-sided strengthening.

    A level at the continuum threshold is out of the proven scope and gets no
    pass/fail verdict.
    """
    if c.at_continuum_threshold:
        return IndexVerdict(False, None, c.n_zero > 0, None)
    holds = (c.nu_plus - c.n_plus) == (c.nu_minus - c.n_minus)
    applies = c.n_zero > 0
    strong = None
    if applies:
        strong = (c.nu_plus - c.n_plus) == 0 and (c.nu_minus - c.n_minus) == 0
        holds = holds and strong
    return IndexVerdict(True, holds, applies, strong)


def kernel_counting_check(c: LevelCensus) -> bool:
    """Kernel-counting criterion when the source has no normalizable chain.

    k = max(k+up, k+down) + nu-  and  k = |k-up - k-down| + nu-.
    """
    if c.nu_plus > 0:
        raise HypothesisUnmet("source Hamiltonian has a normalizable chain here")
    first = c.k_i == max(c.k_up_plus, c.k_down_plus) + c.nu_minus
    second = c.k_i == abs(c.k_up_minus - c.k_down_minus) + c.nu_minus
    return first and second


def index_report(bundle, levels=None, probe: qd.ProbeSpec | None = None) -> IndexReport:
    """Census plus verdicts for every kernel level (or the given ones)."""
    if levels is None:
        seen = []
        for basis in (bundle.kernel_minus, bundle.kernel_plus):
            if basis is None:
                continue
            for e in basis.entries:
                lam = complex(e.eigenvalue)
                if not any(abs(lam - s) <= LEVEL_TOL * (1 + abs(s)) for s in seen):
                    seen.append(lam)
        levels = seen
    censuses = []
    verdicts = []
    countings = []
    for lam in levels:
        c = census(bundle, lam, probe)
        censuses.append(c)
        verdicts.append(index_theorem_check(c))
        if c.at_continuum_threshold:
            countings.append(None)
        else:
            try:
                countings.append(kernel_counting_check(c))
            except HypothesisUnmet:
                countings.append(None)
    return IndexReport(tuple(censuses), tuple(verdicts), tuple(countings))


# -- potential class membership ------------------------------------------------------


@dataclass(frozen=True)
class ClassKReport:
    """Sampled membership checks for the invariant potential class.

    ``re_bounded_below``: Re V >= eps > 0 beyond the probe radius;
    ``im_subdominant``: Im V / Re V decays across doubled windows;
    ``derivative_bound``: the WKB-type expression
    (int sqrt|V|)^2 (|V'|^2/|V|^3 + |V''|/|V|^2) has non-increasing running
    max beyond the second window.
    """

    re_bounded_below: bool
    eps_measured: float
    im_subdominant: bool
    derivative_bound: bool
    member: bool

    def to_json_obj(self):
        return {"re_bounded_below": self.re_bounded_below,
                "eps_measured": self.eps_measured,
                "im_subdominant": self.im_subdominant,
                "derivative_bound": self.derivative_bound,
                "member": self.member}


def class_k_check(v: FuncExpr, r0: float = 6.0, n_samples: int = 160) -> ClassKReport:
    """Sampled check of the three measurable membership conditions.

    Smoothness is structural for expression trees and is not re-verified.
    """
    eps_measured = np.inf
    re_ok = True
    im_ok = True
    bound_ok = True
    for sign in (+1, -1):
        xs = sign * np.linspace(r0, 4 * r0, n_samples)
        d = fc.derivative_values(v, xs, 2)
        vals, dv, ddv = d[0], d[1], d[2]
        re = vals.real
        eps_measured = min(eps_measured, float(re.min()))
        if re.min() <= 0:
            re_ok = False
            im_ok = False  # the ratio is not meaningful without condition 2
            continue
        ratio = np.abs(vals.imag) / re
        half = n_samples // 2
        r_near = float(np.abs(ratio[:half]).max())
        r_far = float(np.abs(ratio[half:]).max())
        if not (r_far <= max(0.75 * r_near, 1e-9) or r_far < 1e-6):
            im_ok = False
        # cumulative int sqrt|V| from r0 outward
        s = np.sqrt(np.abs(vals))
        steps = np.abs(np.diff(xs))
        cums = np.concatenate([[0.0], np.cumsum(0.5 * (s[1:] + s[:-1]) * steps)])
        expr = cums ** 2 * (np.abs(dv) ** 2 / np.abs(vals) ** 3
                            + np.abs(ddv) / np.abs(vals) ** 2)
        # bounded expressions may approach their supremum from below, so the
        # running max is allowed to saturate but not to keep accelerating
        third = n_samples // 3
        m_near = float(expr[:third].max())
        m_mid = float(expr[:2 * third].max())
        m_far = float(expr.max())
        d_near, d_far = m_mid - m_near, m_far - m_mid
        if d_far > max(0.9 * d_near, 0.05 * m_mid + 1e-9):
            bound_ok = False
    member = re_ok and im_ok and bound_ok
    return ClassKReport(re_ok, eps_measured if np.isfinite(eps_measured) else 0.0,
                        im_ok, bound_ok, member)
