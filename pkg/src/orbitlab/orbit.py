"""Interpolation orbits of one element between weighted Lebesgue couples.

The orbit of ``a`` is computed as the means space of ``phi = K(., ., a)``
over the target couple with exponents ``1/r_i = (1/q_i - 1/p_i)_+``; in
practice the CL norm of the target K-profile of ``b`` sampled on its balanced
grid. The module also carries the convolution-weight construction used in
the converse inclusion, a Hoelder check of the embedding chain and a random
harness of couple-bounded operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import median
from typing import Optional

import numpy as np

from .clnorm import CLResult, cl_seq_norm
from .kfunc import KFunctional
from .means import profile_domain
from .phifn import (DEFAULT_DOMAIN, BalancedSequence, InterpFunction, balanced_sequence,
                    classify, evaluate)
from .spaces import (INF, Couple, DimensionError, DomainError, dual_exponent, exponent,
                     format_exponent, inverse, lp_norm)


class ConstructionError(ValueError):
    """Weights cannot carry the sequence (zero weight on its support)."""


class PreconditionError(ValueError):
    """Required decomposition data is missing or inconsistent."""


# -- exponent map -------------------------------------------------------------------

def orbit_exponents(p0, p1, q0, q1):
    """``1/r_i = (1/q_i - 1/p_i)_+`` in exact arithmetic; ``INF`` for a zero part."""
    out = []
    for p, q in ((p0, q0), (p1, q1)):
        inv = max(inverse(q) - inverse(p), Fraction(0))
        out.append(INF if inv == 0 else 1 / inv)
    return tuple(out)


# -- orbit norm ---------------------------------------------------------------------

@dataclass(frozen=True)
class OrbitProblem:
    source: Couple
    target: Couple
    a: np.ndarray
    b: Optional[np.ndarray] = None

    def __post_init__(self):
        a = self.source.space0.check(self.a)
        if not np.any(a):
            raise DomainError("a must be nonzero")
        object.__setattr__(self, "a", a)
        if self.b is not None:
            object.__setattr__(self, "b", self.target.space0.check(self.b))

    @property
    def exponents(self):
        s, t = self.source, self.target
        return s.space0.p, s.space1.p, t.space0.p, t.space1.p


@dataclass(frozen=True)
class OrbitReport:
    r0: object
    r1: object
    phi: InterpFunction
    psi_b: Optional[KFunctional]
    u: Optional[BalancedSequence]
    k_seq: Optional[np.ndarray]
    cl: Optional[CLResult]
    orbit_norm_value: Optional[float]
    status: str
    diagnostics: dict = field(default_factory=dict)


def orbit_norm(problem: OrbitProblem, q: float = 2.0, tol: float = 1e-6,
               domain=DEFAULT_DOMAIN) -> OrbitReport:
    if problem.b is None:
        raise PreconditionError("orbit_norm needs the target element b")
    r0, r1 = orbit_exponents(*problem.exponents)
    phi = InterpFunction.k_derived(problem.source, problem.a)
    cls = classify(phi, profile_domain(phi.kfunc, domain))
    diag = {"phi_bounded": list(cls.bounded), "phi_in_Phi0": cls.in_Phi0}
    if not cls.in_Phi0:
        return OrbitReport(r0, r1, phi, None, None, None, None, None, "out_of_scope", diag)
    b = problem.b
    if not np.any(b):
        return OrbitReport(r0, r1, phi, None, None, np.zeros(0), None, 0.0, "ok", diag)
    psi = KFunctional(problem.target, b)
    psi_fn = InterpFunction("k_derived", kfunc=psi, label="psi_b")
    u = balanced_sequence(psi_fn, q, profile_domain(psi, domain))
    k_seq = np.asarray(psi(np.ones_like(u.t_values), u.t_values), dtype=float).reshape(-1)
    cl = cl_seq_norm(phi, r0, r1, u.t_values, k_seq, tol)
    diag.update({"terms": len(u), "side": u.side, "truncated": list(u.truncated),
                 "cl_residual": cl.residual})
    return OrbitReport(r0, r1, phi, psi, u, k_seq, cl, cl.value, "ok", diag)


# -- convolution weights ------------------------------------------------------------

@dataclass(frozen=True)
class Prop2Weights:
    epsilon: float
    alpha0: np.ndarray
    alpha1: np.ndarray
    beta0: np.ndarray
    beta1: np.ndarray

    def ee_violation(self) -> float:
        """Largest violation of the decay inequalities and of ``alpha <= beta``."""
        e = 1.0 - self.epsilon
        b0, b1 = self.beta0, self.beta1
        parts = [np.zeros(1),
                 b0[1:] * e - b0[:-1], b1[:-1] * e - b1[1:],
                 self.alpha0 - b0, self.alpha1 - b1]
        return float(max(np.max(p) if p.size else 0.0 for p in parts))


def default_epsilon(q: float) -> float:
    return min(0.25, (q - 1.0) / (2.0 * q))


def prop2_weights(alpha0, alpha1, epsilon: float) -> Prop2Weights:
    """``beta0_m = sum_k (1-e)^k alpha0_{m+k}``, ``beta1_m = sum_k (1-e)^k alpha1_{m-k}``.

    Computed by the recursions ``beta0_m = alpha0_m + (1-e) beta0_{m+1}`` and
    ``beta1_m = alpha1_m + (1-e) beta1_{m-1}``.
    """
    a0 = np.asarray(alpha0, dtype=float).reshape(-1)
    a1 = np.asarray(alpha1, dtype=float).reshape(-1)
    if a0.size != a1.size:
        raise DimensionError("alpha sequences differ in length")
    if not 0 < epsilon <= 0.5:
        raise DomainError(f"epsilon must lie in (0, 1/2], got {epsilon}")
    if np.any(a0 < 0) or np.any(a1 < 0) or not (np.all(np.isfinite(a0)) and np.all(np.isfinite(a1))):
        raise DomainError("alpha sequences must be nonnegative and finite")
    e = 1.0 - epsilon
    b0 = np.zeros_like(a0)
    b1 = np.zeros_like(a1)
    acc = 0.0
    for m in range(a0.size - 1, -1, -1):
        acc = a0[m] + e * acc
        b0[m] = acc
    acc = 0.0
    for m in range(a1.size):
        acc = a1[m] + e * acc
        b1[m] = acc
    return Prop2Weights(float(epsilon), a0, a1, b0, b1)


def l1_couple_k(psi_u, w: Prop2Weights, u, s: float, t: float) -> float:
    """``sum_m psi_m min(s/beta0_m, t/(beta1_m u_m))``: K on the weighted l1 couple."""
    psi_u = np.asarray(psi_u, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if not (psi_u.size == u.size == w.beta0.size):
        raise DimensionError("psi, u and weights must be aligned")
    live = psi_u != 0
    b0, b1 = w.beta0[live], w.beta1[live]
    if np.any((b0 <= 0) & (b1 <= 0)):
        raise ConstructionError("both weights vanish where the sequence does not")
    with np.errstate(divide="ignore"):
        c0 = np.where(b0 > 0, s / np.where(b0 > 0, b0, 1.0), np.inf)
        c1 = np.where(b1 > 0, t / np.where(b1 > 0, b1 * u[live], 1.0), np.inf)
    return float(np.sum(np.abs(psi_u[live]) * np.minimum(c0, c1)))


def l1_couple(w: Prop2Weights, u) -> Couple:
    """``{l_1(1/beta0), l_1(1/(beta1 u))}`` as a unit-mass couple."""
    u = np.asarray(u, dtype=float)
    return Couple.lebesgue(np.ones(u.size), 1, 1.0 / w.beta0, 1, 1.0 / (w.beta1 * u))


@dataclass(frozen=True)
class Prop2Report:
    constant: float
    q_prime: float
    per_index: np.ndarray
    stated_bound: np.ndarray
    tail_bound: np.ndarray
    stated_holds: bool
    tail_holds: bool
    ee_violation: float
    weights: Prop2Weights


def measured_q_prime(psi_u, w: Prop2Weights, u) -> float:
    """Smallest one-step decay ratio of the two weighted tails."""
    psi_u, u = np.asarray(psi_u, float), np.asarray(u, float)
    if psi_u.size < 2:
        return INF
    g0 = psi_u / w.beta0
    g1 = w.beta1 * u / psi_u
    r0 = g0[1:] / g0[:-1]
    r1 = g1[1:] / g1[:-1]
    return float(min(r0.min(), r1.min()))


def prop2_verify(phi: InterpFunction, psi_u, u, alpha0=None, alpha1=None,
                 epsilon: Optional[float] = None, q: float = 2.0, grid=None) -> Prop2Report:
    """Build the weights and measure ``sup_t K(1, t, psi_u; l1 couple) / phi(1, t)``.

    Also evaluates, at every ``k``, ``K(beta0_k, beta1_k u_k)`` against
    ``q'/(q'-1) psi_k`` and against the two-tail bound ``(q'+1)/(q'-1) psi_k``.
    """
    psi_u = np.asarray(psi_u, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if alpha0 is None or alpha1 is None:
        raise PreconditionError("prop2_verify needs the decomposition alpha0, alpha1")
    eps = default_epsilon(q) if epsilon is None else epsilon
    w = prop2_weights(alpha0, alpha1, eps)
    if grid is None:
        grid = np.geomspace(2.0 ** -20, 2.0 ** 20, 81)
    grid = np.asarray(grid, dtype=float)
    if not np.any(psi_u):
        zeros = np.zeros(psi_u.size)
        return Prop2Report(0.0, INF, zeros, zeros, zeros, True, True, w.ee_violation(), w)
    ratios = [l1_couple_k(psi_u, w, u, 1.0, t) / evaluate(phi, 1.0, t) for t in grid]
    qp = measured_q_prime(psi_u, w, u)
    per_k = np.array([l1_couple_k(psi_u, w, u, w.beta0[k], w.beta1[k] * u[k])
                      for k in range(psi_u.size)])
    if math.isinf(qp):
        stated_c, tail_c = 1.0, 1.0
    elif qp > 1:
        stated_c, tail_c = qp / (qp - 1), (qp + 1) / (qp - 1)
    else:
        stated_c = tail_c = INF
    stated = stated_c * psi_u
    tail = tail_c * psi_u
    slack = 1 + 1e-12
    return Prop2Report(float(max(ratios)), qp, per_k, stated, tail,
                       bool(np.all(per_k <= stated * slack)), bool(np.all(per_k <= tail * slack)),
                       w.ee_violation(), w)


# -- embedding chain ---------------------------------------------------------------

def prop3_check(psi_u, u, w: Prop2Weights, p0, p1, q0, q1) -> dict:
    """Norms of ``psi_u`` along ``l_1(1/beta) -> l_p(1/beta) -> l_q`` on both legs.

    The first step has norm 1; the second is Hoelder with ``||beta||_r`` where
    ``1/r = (1/q - 1/p)_+``.
    """
    psi_u = np.asarray(psi_u, dtype=float)
    u = np.asarray(u, dtype=float)
    r = orbit_exponents(p0, p1, q0, q1)
    out = {"holds": True}
    legs = ((0, w.beta0, np.ones_like(u), p0, q0, r[0]), (1, w.beta1 * u, u, p1, q1, r[1]))
    for leg, beta, target_w, p, qq, rr in legs:
        pos = beta > 0
        if np.any(psi_u[~pos] != 0):
            raise ConstructionError("sequence is supported where the weight vanishes")
        y = np.abs(psi_u[pos]) / beta[pos]
        n1 = lp_norm(y, 1)
        npow = lp_norm(y, exponent(p))
        nq = lp_norm(np.abs(psi_u) / target_w, exponent(qq))
        holder = lp_norm(beta[pos] / target_w[pos], rr) * npow
        out[f"leg{leg}"] = {"l1": n1, "lp": npow, "lq": nq, "holder_bound": holder}
        out["holds"] &= bool(npow <= n1 * (1 + 1e-12) and nq <= holder * (1 + 1e-12))
    return out


# -- operators ----------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorSpec:
    """``diagonal`` (``d``), ``rank_one`` (``x -> (g.x) y``) or ``linfty_factorized``
    (``x -> w @ x``; columns of ``w`` are the images of unit vectors)."""

    kind: str
    d: Optional[np.ndarray] = None
    g: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None
    declared_bound: float = INF

    def scaled(self, c: float) -> "OperatorSpec":
        if self.kind == "diagonal":
            return OperatorSpec("diagonal", d=self.d * c, declared_bound=self.declared_bound * abs(c))
        if self.kind == "rank_one":
            return OperatorSpec("rank_one", g=self.g * c, y=self.y,
                                declared_bound=self.declared_bound * abs(c))
        return OperatorSpec(self.kind, w=self.w * c, declared_bound=self.declared_bound * abs(c))


def _scale(space):
    """``x -> x U mu^(1/p)`` turns the weighted norm into a plain l_p norm."""
    if math.isinf(space.pf):
        return space.weights
    return space.weights * space.masses ** (1.0 / space.pf)


def _multiplier_norm(wvec, p, q) -> float:
    """Norm of pointwise multiplication by ``wvec`` from ``l_p`` to ``l_q``."""
    if q >= p:
        return float(np.max(np.abs(wvec)))
    r = 1 / (inverse(q) - inverse(p))
    return lp_norm(wvec, r)


def leg_bounds(op: OperatorSpec, src: Couple, dst: Couple) -> tuple:
    """Operator-norm bounds on both legs (exact for diagonal and rank-one)."""
    out = []
    for i in (0, 1):
        xs, ys = (src.space0, dst.space0) if i == 0 else (src.space1, dst.space1)
        sx, sy = _scale(xs), _scale(ys)
        if op.kind == "diagonal":
            if src.size != dst.size:
                raise DimensionError("diagonal operators need equal atom counts")
            out.append(_multiplier_norm(np.abs(op.d) * sy / sx, xs.p, ys.p))
        elif op.kind == "rank_one":
            dual = lp_norm(op.g / sx, dual_exponent(xs.p))
            out.append(dual * ys.norm(op.y))
        elif op.kind == "linfty_factorized":
            # |(w x)_j| <= ||w_j / sx||_{p'} ||x||, then the target norm of that profile
            rows = np.array([lp_norm(row / sx, dual_exponent(xs.p)) for row in op.w])
            out.append(ys.norm(rows))
        else:
            raise DomainError(f"unknown operator kind {op.kind!r}")
    return tuple(out)


def apply_operator(op: OperatorSpec, src: Couple, dst: Couple, x):
    """``(T x, max of the two leg bounds)``."""
    x = src.space0.check(x)
    if op.kind == "diagonal":
        if op.d.size != x.size or src.size != dst.size:
            raise DimensionError("diagonal operator does not match the couples")
        y = op.d * x
    elif op.kind == "rank_one":
        if op.g.size != x.size or op.y.size != dst.size:
            raise DimensionError("rank-one operator does not match the couples")
        y = float(op.g @ x) * op.y
    elif op.kind == "linfty_factorized":
        if op.w.shape != (dst.size, src.size):
            raise DimensionError(f"matrix has shape {op.w.shape}, expected {(dst.size, src.size)}")
        y = op.w @ x
    else:
        raise DomainError(f"unknown operator kind {op.kind!r}")
    return y, max(leg_bounds(op, src, dst))


# -- random harness -----------------------------------------------------------------

@dataclass(frozen=True)
class HarnessConfig:
    atoms: tuple = (2, 4)
    exponents: tuple = (Fraction(1), Fraction(2), INF)
    log2_weight: float = 3.0
    q: float = 2.0
    ceiling_factor: float = 10.0


@dataclass(frozen=True)
class HarnessReport:
    lines: list
    median: Optional[float]
    ceiling: Optional[float]
    failures: int
    outliers: int


def _random_couple(rng, n, cfg):
    menu = list(cfg.exponents)
    p0, p1 = (menu[i] for i in rng.integers(0, len(menu), 2))
    span = cfg.log2_weight
    return Couple.lebesgue(2.0 ** rng.uniform(-1, 1, n), p0, 2.0 ** rng.uniform(-span, span, n),
                           p1, 2.0 ** rng.uniform(-span, span, n))


def _random_operator(rng, n_src, n_dst):
    kinds = ["diagonal", "rank_one", "linfty_factorized"]
    kind = kinds[int(rng.integers(0, 3))]

    def vec(n):
        return 2.0 ** rng.uniform(-2, 2, n) * rng.choice([-1.0, 1.0], n)

    if kind == "diagonal":
        return OperatorSpec("diagonal", d=vec(n_src))
    if kind == "rank_one":
        return OperatorSpec("rank_one", g=vec(n_src), y=vec(n_dst))
    return OperatorSpec("linfty_factorized", w=vec(n_src * n_dst).reshape(n_dst, n_src))


def harness_trial(seed: int, trial: int, cfg: HarnessConfig = HarnessConfig()) -> dict:
    rng = np.random.default_rng([seed, trial])
    n = int(rng.integers(cfg.atoms[0], cfg.atoms[1] + 1))
    src = _random_couple(rng, n, cfg)
    op = _random_operator(rng, n, n)
    dst = _random_couple(rng, n, cfg)
    a = rng.normal(size=n)
    bound = max(leg_bounds(op, src, dst))
    op = op.scaled(1.0 / bound)
    op = OperatorSpec(op.kind, op.d, op.g, op.y, op.w, declared_bound=1.0)
    y, new_bound = apply_operator(op, src, dst, a)
    p0, p1, q0, q1 = src.space0.p, src.space1.p, dst.space0.p, dst.space1.p
    r0, r1 = orbit_exponents(p0, p1, q0, q1)
    line = {"trial": trial, "seed": seed, "operator": op.kind,
            "exponents": {k: format_exponent(v) for k, v in
                          (("p0", p0), ("p1", p1), ("q0", q0), ("q1", q1), ("r0", r0), ("r1", r1))}}
    try:
        report = orbit_norm(OrbitProblem(src, dst, a, y), q=cfg.q)
        value = report.orbit_norm_value
        line["measured_constant"] = None if value is None else value / new_bound
        line["status"] = report.status
    except Exception as exc:  # reported, not raised: the harness counts failures
        line["measured_constant"] = None
        line["status"] = f"error: {type(exc).__name__}: {exc}"
    return line


def harness_prop1(seed: int, trials: int, cfg: HarnessConfig = HarnessConfig()) -> HarnessReport:
    lines = [harness_trial(seed, k, cfg) for k in range(trials)]
    vals = [ln["measured_constant"] for ln in lines if ln["measured_constant"] is not None]
    med = median(vals) if vals else None
    ceiling = None if med is None else cfg.ceiling_factor * med
    failures = outliers = 0
    for ln in lines:
        v = ln["measured_constant"]
        if v is None or not math.isfinite(v):
            ln["pass"] = False
            failures += 1
        else:
            ln["pass"] = bool(v <= ceiling)
            outliers += not ln["pass"]
    return HarnessReport(lines, med, ceiling, failures, outliers)


def prop2_instance(rng, atoms: int = 8, log2_spread: float = 8.0, q: float = 2.0):
    """A random ``(phi, psi_u, u, alpha0, alpha1, r0, r1)`` for the convolution check.

    ``psi`` is the K-profile of a random element on a random couple, ``u`` its
    balanced grid, ``phi`` a power or K-derived function, and the alphas are the
    CL witnesses of ``{psi(u_m)}`` in ``phi(l_r0, l_r1(1/u))``.
    """
    menu = [Fraction(1), Fraction(4, 3), Fraction(2), Fraction(4), INF]
    pick = [menu[i] for i in rng.integers(0, len(menu), 4)]
    tgt = Couple.lebesgue(np.ones(atoms), pick[2], 2.0 ** rng.uniform(-log2_spread, log2_spread, atoms),
                          pick[3], 2.0 ** rng.uniform(-log2_spread, log2_spread, atoms))
    b = rng.normal(size=atoms)
    psi = KFunctional(tgt, b)
    u = balanced_sequence(InterpFunction("k_derived", kfunc=psi, label="psi"), q,
                          profile_domain(psi, DEFAULT_DOMAIN)).t_values
    psi_u = np.asarray(psi(np.ones_like(u), u), dtype=float).reshape(-1)
    if rng.random() < 0.5:
        phi = InterpFunction.power(Fraction(int(rng.integers(1, 4)), 4))
    else:
        src = Couple.lebesgue(np.ones(3), pick[0], 2.0 ** rng.uniform(-4, 4, 3),
                              pick[1], 2.0 ** rng.uniform(-4, 4, 3))
        phi = InterpFunction.k_derived(src, rng.normal(size=3))
    r0, r1 = orbit_exponents(*pick)
    cl = cl_seq_norm(phi, r0, r1, u, psi_u)
    return phi, psi_u, u, cl.witness0, cl.witness1 / u, r0, r1
