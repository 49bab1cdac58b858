"""Acceptance suite: property checks with measured constants.

Each criterion returns a :class:`CriterionResult`. Random instances are drawn
from ``numpy.random.default_rng([seed, criterion, index])`` so every run with
the same seed sees the same problems. ``artifact()`` drops wall-clock times,
which keeps serialized results byte-stable.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .clnorm import cl_norm
from .kfunc import k_at, k_oracle
from .means import means_norm_direct
from .orbit import (default_epsilon, harness_prop1, l1_couple_k, orbit_exponents,
                    prop2_instance, prop2_verify, prop2_weights)
from .phifn import InterpFunction, balanced_sequence, equivalence_band
from .spaces import INF, Couple, format_exponent

K_MENU = (Fraction(1), Fraction(3, 2), Fraction(2), Fraction(4), INF)
EXP_MENU = (Fraction(1), Fraction(4, 3), Fraction(2), Fraction(4), INF)
THETAS = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))


@dataclass
class CriterionResult:
    number: int
    title: str
    numeric_pass: bool
    metric: float
    threshold: float
    limit: float
    runtime: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.numeric_pass and self.runtime <= self.limit

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"C{self.number} {verdict}  {self.title}: metric={self.metric:.6g} "
                f"threshold={self.threshold:.6g} time={self.runtime:.1f}s/{self.limit:.0f}s")

    def artifact(self) -> dict:
        return {"number": self.number, "title": self.title, "numeric_pass": self.numeric_pass,
                "metric": self.metric, "threshold": self.threshold, "details": self.details}


def _timed(fn):
    def run(seed: int = 42) -> CriterionResult:
        t0 = time.perf_counter()
        res = fn(seed)
        res.runtime = time.perf_counter() - t0
        return res
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def _pick(rng, menu, k):
    return [menu[i] for i in rng.integers(0, len(menu), k)]


@_timed
def criterion_1(seed: int) -> CriterionResult:
    """k_at against the grid oracle on 200 random small couples."""
    worst, worst_case = 0.0, None
    for i in range(200):
        rng = np.random.default_rng([seed, 1, i])
        m = int(rng.integers(1, 4))
        p0, p1 = _pick(rng, K_MENU, 2)
        c = Couple.lebesgue(2.0 ** rng.uniform(-4, 4, m), p0, 2.0 ** rng.uniform(-4, 4, m),
                            p1, 2.0 ** rng.uniform(-4, 4, m))
        x = rng.normal(size=m)
        s, t = 2.0 ** rng.uniform(-3, 3, 2)
        value = k_at(c, x, s, t).value
        oracle = k_oracle(c, x, s, t)
        err = abs(value - oracle) / (1 + oracle)
        if err >= worst:
            worst, worst_case = err, i
    return CriterionResult(1, "K-oracle agreement", worst <= 1e-5, worst, 1e-5, 60.0,
                           details={"instances": 200, "worst_instance": worst_case})


@_timed
def criterion_2(seed: int) -> CriterionResult:
    """Balanced sequences of powers against 4^n and 16^n."""
    worst, rows = 0.0, {}
    for th in THETAS:
        seq = balanced_sequence(InterpFunction.power(th), 2.0, (2.0 ** -48, 2.0 ** 48)).window(10)
        base = 4.0 if th == Fraction(1, 2) else 16.0
        if seq.indices.min() > -10 or seq.indices.max() < 10:
            worst = math.inf
        expected = base ** seq.indices.astype(float)
        err = float(np.max(np.abs(seq.t_values / expected - 1)))
        rows[str(th)] = err
        worst = max(worst, err)
    return CriterionResult(2, "balanced-sequence exactness", worst <= 1e-8, worst, 1e-8, 1.0,
                           details={"max_rel_error": rows})


@_timed
def criterion_3(seed: int) -> CriterionResult:
    """C(40) <= 1.1 C(20) for the discretized K-functional of powers."""
    worst, rows = 0.0, {}
    menu = (Fraction(1), Fraction(2), INF)
    for th in THETAS:
        phi = InterpFunction.power(th)
        for p0, p1 in itertools.product(menu, menu):
            c20 = equivalence_band(phi, p0, p1, 2.0, 20).constant
            c40 = equivalence_band(phi, p0, p1, 2.0, 40).constant
            key = f"theta={th},p0={format_exponent(p0)},p1={format_exponent(p1)}"
            rows[key] = {"C20": c20, "C40": c40}
            worst = max(worst, c40 / c20)
    return CriterionResult(3, "balanced-grid equivalence stability", worst <= 1.1, worst, 1.1, 120.0,
                           details={"bands": rows})


def _means_instance(seed, i):
    rng = np.random.default_rng([seed, 4, i])
    m = int(rng.integers(1, 4))
    p0, p1 = _pick(rng, (Fraction(1), Fraction(2)), 2)
    c = Couple.lebesgue(2.0 ** rng.uniform(-2, 2, m), p0, 2.0 ** rng.uniform(-2, 2, m),
                        p1, 2.0 ** rng.uniform(-2, 2, m))
    return c, p0, p1, rng.normal(size=m)


@_timed
def criterion_4(seed: int) -> CriterionResult:
    """Direct means bound over the CL norm on 50 instances, plus N=4 -> 6 stability."""
    phi = InterpFunction.power(Fraction(1, 2))
    seq = balanced_sequence(phi, 2.0)
    ratios4, ratios6 = [], []
    for i in range(50):
        c, p0, p1, x = _means_instance(seed, i)
        cl = cl_norm(phi, c, x).value
        ratios4.append(means_norm_direct(phi, c, p0, p1, x, seq, 4) / cl)
        if i < 10:
            ratios6.append(means_norm_direct(phi, c, p0, p1, x, seq, 6) / cl)
    r4 = np.array(ratios4)
    c_star = float(max(r4.max(), 1.0 / r4.min()))
    sub4, sub6 = r4[:10], np.array(ratios6)
    drift = float(max(abs(sub6.min() / sub4.min() - 1), abs(sub6.max() / sub4.max() - 1)))
    ok = c_star <= 100 and drift <= 0.2
    return CriterionResult(4, "direct means bounded ratio", ok, c_star, 100.0, 600.0,
                           details={"band_N4": [float(r4.min()), float(r4.max())],
                                    "subsample_band_N4": [float(sub4.min()), float(sub4.max())],
                                    "subsample_band_N6": [float(sub6.min()), float(sub6.max())],
                                    "band_drift": drift})


@lru_cache(maxsize=4)
def prop2_suite(seed: int):
    """The 50 ``(phi, psi_u, u, alpha0, alpha1)`` triples shared by criteria 5 and 6."""
    out = []
    for i in range(50):
        rng = np.random.default_rng([seed, 5, i])
        phi, psi_u, u, a0, a1, _, _ = prop2_instance(rng)
        out.append((phi, psi_u, u, a0, a1))
    return tuple(out)


@_timed
def criterion_5(seed: int) -> CriterionResult:
    """Per-index bound ``K(beta0_k, beta1_k u_k) <= q'/(q'-1) psi_k`` and the decay inequalities."""
    stated_fail, tail_fail, ee, worst = [], [], 0.0, 0.0
    for i, (phi, psi_u, u, a0, a1) in enumerate(prop2_suite(seed)):
        rep = prop2_verify(phi, psi_u, u, a0, a1)
        ee = max(ee, rep.ee_violation)
        worst = max(worst, float(np.max(rep.per_index / rep.stated_bound)))
        if not rep.stated_holds:
            stated_fail.append(i)
        if not rep.tail_holds:
            tail_fail.append(i)
    ok = not stated_fail and ee <= 1e-12
    return CriterionResult(5, "convolution-weight discrete bound", ok, worst, 1.0, 30.0,
                           details={"stated_bound_failures": stated_fail,
                                    "two_tail_bound_failures": tail_fail,
                                    "max_ee_violation": ee,
                                    "max_ratio_to_stated_bound": worst})


def _l1_identity_gap(psi_u, w, u, s, t) -> float:
    b0, b1 = w.beta0, w.beta1 * u
    live = (b0 > 0) & (b1 > 0)
    # atoms with a vanishing weight are forced wholly into the other space
    forced = float(np.sum(np.abs(psi_u[~live & (b0 > 0)]) * s / b0[~live & (b0 > 0)])
                   + np.sum(np.abs(psi_u[~live & (b1 > 0)]) * t / b1[~live & (b1 > 0)]))
    ref = forced
    if live.any():
        c = Couple.lebesgue(np.ones(int(live.sum())), 1, 1.0 / b0[live], 1, 1.0 / b1[live])
        ref += k_at(c, psi_u[live], s, t).value
    val = l1_couple_k(psi_u, w, u, s, t)
    return abs(val - ref) / max(1.0, abs(ref))


@_timed
def criterion_6(seed: int) -> CriterionResult:
    """l1_couple_k against k_at on the weighted l1 couple."""
    worst = 0.0
    grid = 2.0 ** np.arange(-20, 21, 5)
    for phi, psi_u, u, a0, a1 in prop2_suite(seed):
        w = prop2_weights(a0, a1, default_epsilon(2.0))
        pairs = [(1.0, t) for t in grid]
        pairs += [(w.beta0[k], w.beta1[k] * u[k]) for k in range(u.size)
                  if w.beta0[k] > 0 and w.beta1[k] > 0]
        for s, t in pairs:
            worst = max(worst, _l1_identity_gap(psi_u, w, u, s, t))
    return CriterionResult(6, "cross-module l1 identity", worst <= 1e-10, worst, 1e-10, 5.0,
                           details={"instances": 50})


@_timed
def criterion_7(seed: int) -> CriterionResult:
    """Operator harness: 100 trials, no failures, no outliers."""
    rep = harness_prop1(seed, 100)
    vals = [ln["measured_constant"] for ln in rep.lines if ln["measured_constant"] is not None]
    spread = max(vals) / rep.median if vals and rep.median else math.inf
    ok = rep.failures == 0 and rep.outliers == 0
    return CriterionResult(7, "operator orbit harness", ok, spread, 10.0, 300.0,
                           details={"median": rep.median, "max": max(vals) if vals else None,
                                    "failures": rep.failures, "outliers": rep.outliers,
                                    "trials": rep.lines})


def _expected_r(p, q):
    inv_p = Fraction(0) if p == INF else 1 / Fraction(p)
    inv_q = Fraction(0) if q == INF else 1 / Fraction(q)
    d = inv_q - inv_p
    return INF if d <= 0 else 1 / d


@_timed
def criterion_8(seed: int) -> CriterionResult:
    """Exponent map on the full menu, compared exactly."""
    bad = []
    for p0, p1, q0, q1 in itertools.product(EXP_MENU, repeat=4):
        got = orbit_exponents(p0, p1, q0, q1)
        want = (_expected_r(p0, q0), _expected_r(p1, q1))
        exact = all(g == INF or isinstance(g, Fraction) for g in got)
        if got != want or not exact:
            bad.append([format_exponent(v) for v in (p0, p1, q0, q1)])
    return CriterionResult(8, "exponent map exactness", not bad, float(len(bad)), 0.0, 1.0,
                           details={"cases": len(EXP_MENU) ** 4, "mismatches": bad})


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4,
            criterion_5, criterion_6, criterion_7, criterion_8)


def run_suite(seed: int = 42, only=None) -> list[CriterionResult]:
    """Run criteria 1-8 (or the numbers in ``only``) in order."""
    chosen = [c for k, c in enumerate(CRITERIA, 1) if only is None or k in only]
    return [c(seed) for c in chosen]
