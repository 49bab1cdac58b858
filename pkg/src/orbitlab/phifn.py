"""Interpolation functions ``phi(s, t) = s * rho(t / s)``.

Only the trace ``rho(t) = phi(1, t)`` is stored, so homogeneity of degree one
holds by construction. ``rho`` must be quasi-concave: nondecreasing with
``rho(t)/t`` nonincreasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .spaces import Couple, DomainError

DEFAULT_DOMAIN = (2.0 ** -40, 2.0 ** 40)
LIMIT_GATE = 0.05
FLAT_RTOL = 1e-6
ZERO_RTOL = 1e-6
RESIDUAL_RTOL = 1e-9


class InvariantError(ValueError):
    """``rho`` is not quasi-concave on the checked grid."""


class ClassificationError(ValueError):
    """Edge-limit estimates disagree; carries both estimates."""

    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


@dataclass(frozen=True, eq=False)
class InterpFunction:
    """A quasi-concave trace ``rho`` with one of four realizations.

    Use the constructors :meth:`power`, :func:`concave_majorant`,
    :meth:`k_derived` and :meth:`from_callable` rather than the raw init.
    """

    kind: str
    theta: Optional[Fraction] = None
    knots: Optional[tuple] = None
    kfunc: object = None
    func: Optional[Callable] = None
    label: str = ""

    # -- constructors -------------------------------------------------------
    @classmethod
    def power(cls, theta) -> "InterpFunction":
        th = Fraction(theta).limit_denominator(10 ** 12) if isinstance(theta, float) else Fraction(theta)
        if not 0 <= th <= 1:
            raise DomainError(f"power exponent theta must lie in [0, 1], got {theta}")
        return cls("power", theta=th, label=f"power({th})")

    @classmethod
    def k_derived(cls, couple: Couple, x) -> "InterpFunction":
        from .kfunc import KFunctional

        kf = KFunctional(couple, x)
        if kf.kind == "zero":
            raise DomainError("k_derived function of the zero element is identically zero")
        return cls("k_derived", kfunc=kf, label="k_derived")

    @classmethod
    def from_callable(cls, rho: Callable, label: str = "callable",
                      domain=DEFAULT_DOMAIN) -> "InterpFunction":
        phi = cls("callable", func=rho, label=label)
        phi.check_quasi_concave(domain)
        return phi

    # -- evaluation ---------------------------------------------------------
    def rho(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "power":
            return t ** float(self.theta)
        if self.kind == "sampled":
            kt, kv = self.knots
            # linear through the origin on the left, flat on the right
            return np.where(t < kt[0], t * (kv[0] / kt[0]), np.interp(t, kt, kv))
        if self.kind == "k_derived":
            return self.kfunc.rho(t)
        return np.asarray(np.vectorize(self.func, otypes=[float])(t)) if t.ndim else float(self.func(float(t)))

    def __call__(self, s, t):
        return evaluate(self, s, t)

    def check_quasi_concave(self, domain=DEFAULT_DOMAIN, points: int = 64, rtol: float = 1e-9):
        lo, hi = domain
        t = np.geomspace(lo, hi, points)
        r = np.asarray(self.rho(t), dtype=float)
        if np.any(~np.isfinite(r)) or np.any(r <= 0):
            raise InvariantError(f"{self.label}: rho must be positive and finite on the domain")
        slack = rtol * r[1:]
        if np.any(r[1:] < r[:-1] - slack):
            k = int(np.flatnonzero(r[1:] < r[:-1] - slack)[0])
            raise InvariantError(f"{self.label}: rho decreases between t={t[k]:.6g} and t={t[k + 1]:.6g}")
        q = r / t
        if np.any(q[1:] > q[:-1] * (1 + rtol)):
            k = int(np.flatnonzero(q[1:] > q[:-1] * (1 + rtol))[0])
            raise InvariantError(f"{self.label}: rho(t)/t increases between t={t[k]:.6g} and t={t[k + 1]:.6g}")


def evaluate(phi: InterpFunction, s, t):
    """``phi(s, t) = s * rho(t / s)``; exact ``s^(1-theta) t^theta`` for powers."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s <= 0) or np.any(t <= 0):
        raise DomainError("phi is evaluated at positive arguments only")
    if phi.kind == "power":
        th = float(phi.theta)
        out = s ** (1.0 - th) * t ** th
    else:
        out = s * phi.rho(t / s)
    return float(out) if np.ndim(out) == 0 else out


# -- least concave majorant ---------------------------------------------------

def concave_majorant(points) -> InterpFunction:
    """Smallest quasi-concave piecewise-linear ``rho`` above the samples.

    The upper hull is taken together with the origin, cut at its peak and
    continued flat to the right; left of the first knot ``rho`` is linear
    through the origin.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise DomainError("concave_majorant needs at least two (t, v) pairs")
    t, v = pts[:, 0], pts[:, 1]
    if np.any(~np.isfinite(pts)) or np.any(t <= 0) or np.any(v <= 0):
        raise DomainError("samples must be positive and finite")
    if np.any(np.diff(t) <= 0):
        raise DomainError("sample abscissae must be strictly increasing")
    hull = [(0.0, 0.0)]
    for pt in zip(t.tolist(), v.tolist()):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point when it lies on or below the chord
            if (y2 - y1) * (pt[0] - x1) <= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    hull = hull[1:]
    peak = max(range(len(hull)), key=lambda i: (hull[i][1], -i))
    hull = hull[:peak + 1]
    kt = np.array([h[0] for h in hull])
    kv = np.array([h[1] for h in hull])
    kt.setflags(write=False)
    kv.setflags(write=False)
    return InterpFunction("sampled", knots=(kt, kv), label="sampled")


# -- classification -------------------------------------------------------------

@dataclass(frozen=True)
class PhiClassification:
    alpha: float
    beta: float
    phi0: Optional[InterpFunction]
    in_Phi0: bool
    nondegenerate: tuple
    bounded: tuple

    @property
    def both_bounded(self) -> bool:
        return self.bounded[0] and self.bounded[1]


def _edge_limit(g, s1: float, name: str, scale: float) -> float:
    """Limit of ``g(s)`` as ``s -> 0`` from ``s1 < 2 s1 < 4 s1``.

    Two-point linear extrapolation, done twice; the two estimates must agree
    within the 5% gate unless both are negligible against ``scale``.
    """
    s = np.array([s1, 2 * s1, 4 * s1])
    g1, g2, g3 = (float(v) for v in g(s))
    e1 = (s[1] * g1 - s[0] * g2) / (s[1] - s[0])
    e2 = (s[2] * g2 - s[1] * g3) / (s[2] - s[1])
    tiny = ZERO_RTOL * scale
    if abs(e1) <= tiny and abs(e2) <= tiny:
        return 0.0
    if abs(e1 - e2) > LIMIT_GATE * max(abs(e1), abs(e2)):
        raise ClassificationError(
            f"{name}: inconsistent limit estimates {e1:.6g} and {e2:.6g}", (e1, e2))
    return max(e1, 0.0) if e1 > tiny else 0.0


def _flat_at_infinity(g, big: float) -> bool:
    """``g`` nondecreasing; bounded if it no longer moves near ``big``."""
    g1, g2 = (float(v) for v in g(np.array([big / 2, big])))
    return g2 <= g1 * (1 + FLAT_RTOL)


def classify(phi: InterpFunction, domain=DEFAULT_DOMAIN) -> PhiClassification:
    """Split ``phi = alpha s + beta t + phi0`` and flag (non)degeneracy.

    ``bounded[0]``: ``phi(1, t)`` bounded; ``bounded[1]``: ``phi(t, 1)`` bounded.
    ``phi0`` is ``None`` when it vanishes identically.
    """
    lo, hi = domain
    if not (0 < lo < 1 < hi):
        raise DomainError("classify needs 0 < t_min < 1 < t_max")
    if phi.kind == "power":
        th = phi.theta
        if th == 0:
            return PhiClassification(1.0, 0.0, None, False, (False, False), (True, False))
        if th == 1:
            return PhiClassification(0.0, 1.0, None, False, (False, False), (False, True))
        return PhiClassification(0.0, 0.0, phi, True, (True, True), (False, False))
    rho = phi.rho
    scale = float(rho(1.0))
    alpha = _edge_limit(rho, lo, "phi(1,t) at t->0", scale)
    beta = _edge_limit(lambda s: s * rho(1.0 / s), 1.0 / hi, "phi(t,1) at t->0", scale)
    bounded0 = _flat_at_infinity(rho, hi)
    bounded1 = _flat_at_infinity(lambda t: rho(1.0 / t) * t, 1.0 / lo)
    if alpha == 0.0 and beta == 0.0:
        phi0 = phi
    else:
        grid = np.geomspace(lo, hi, 161)
        v = rho(grid) - alpha - beta * grid
        if np.all(v <= ZERO_RTOL * scale):
            phi0 = None
        else:
            keep = v > 0
            phi0 = concave_majorant(np.column_stack([grid[keep], v[keep]]))
    in_phi0 = alpha == 0.0 and beta == 0.0
    nondeg = (alpha == 0.0 and not bounded0, beta == 0.0 and not bounded1)
    return PhiClassification(float(alpha), float(beta), phi0, bool(in_phi0),
                             (bool(nondeg[0]), bool(nondeg[1])), (bool(bounded0), bool(bounded1)))


# -- balanced sequences -----------------------------------------------------------

@dataclass(frozen=True)
class BalancedSequence:
    """``t_n`` for ``n`` in ``indices``; ``rho_values`` are ``rho(t_n)``.

    ``side`` is ``two_sided``, ``left_only``, ``right_only``, ``finite`` (both
    directions end because no further solution exists) or ``empty`` (only the
    anchor). ``truncated`` flags a side cut by the computation domain.
    """

    t_values: np.ndarray
    rho_values: np.ndarray
    indices: np.ndarray
    q: float
    side: str
    truncated: tuple

    def __len__(self):
        return self.t_values.size

    @property
    def anchor_position(self) -> int:
        return int(np.flatnonzero(self.indices == 0)[0])

    def window(self, n: int) -> "BalancedSequence":
        """Entries with ``|index| <= n``."""
        keep = np.abs(self.indices) <= n
        trunc = (self.truncated[0] or bool(self.indices.min() < -n),
                 self.truncated[1] or bool(self.indices.max() > n))
        return BalancedSequence(self.t_values[keep], self.rho_values[keep],
                                self.indices[keep], self.q, self.side, trunc)

    def ratios(self):
        """The two ratios of the balancing condition for each consecutive pair."""
        t, r = self.t_values, self.rho_values
        return r[1:] / r[:-1], (t[1:] * r[:-1]) / (t[:-1] * r[1:])


def _step(rho, t0: float, r0: float, q: float, bound: float, forward: bool):
    """Next grid point from ``t0`` towards ``bound`` by bisection in ``log t``.

    Returns ``(t, rho(t))`` with the balancing score ``>= q``, or ``None`` when
    no such point exists before ``bound``.
    """
    log_q, log_t0, log_r0 = math.log(q), math.log(t0), math.log(r0)
    def score(log_t):
        t = math.exp(log_t)
        r = float(rho(t))
        lr = math.log(r)
        if forward:
            return min(lr - log_r0, log_t - log_t0 + log_r0 - lr), t, r
        return min(log_r0 - lr, log_t0 - log_t + lr - log_r0), t, r

    far = math.log(bound)
    val, t_far, r_far = score(far)
    if val < log_q - RESIDUAL_RTOL:
        return None
    near, best = log_t0, (t_far, r_far)
    for _ in range(200):
        mid = 0.5 * (near + far)
        if mid == near or mid == far:
            break
        val, tm, rm = score(mid)
        if val >= log_q:
            far, best = mid, (tm, rm)
        else:
            near = mid
    return best


def balanced_sequence(phi: InterpFunction, q: float = 2.0, domain=DEFAULT_DOMAIN,
                      anchor: float = 1.0, max_terms: int = 10_000) -> BalancedSequence:
    """Grid with ``min(rho(t+)/rho(t), t+ rho(t)/(t rho(t+))) = q`` between neighbours."""
    if not q > 1:
        raise DomainError(f"balancing ratio q must exceed 1, got {q}")
    lo, hi = domain
    if not (0 < lo <= anchor <= hi):
        raise DomainError("anchor must lie inside the domain")
    phi.check_quasi_concave(domain)
    rho = phi.rho
    r_anchor = float(rho(anchor))
    right, left = [], []
    t, r = anchor, r_anchor
    cut_right = False
    while len(right) < max_terms:
        nxt = _step(rho, t, r, q, hi, True)
        if nxt is None:
            break
        t, r = nxt
        right.append(nxt)
    else:
        cut_right = True
    t, r = anchor, r_anchor
    cut_left = False
    while len(left) < max_terms:
        nxt = _step(rho, t, r, q, lo, False)
        if nxt is None:
            break
        t, r = nxt
        left.append(nxt)
    else:
        cut_left = True
    # a side is cut by the domain when one more step would still be possible
    # with the domain doubled in log scale
    ext_lo, ext_hi = max(lo * lo, 1e-300), min(hi * hi, 1e300)
    if not cut_right:
        tr, rr = right[-1] if right else (anchor, r_anchor)
        cut_right = _step(rho, tr, rr, q, ext_hi, True) is not None
    if not cut_left:
        tl, rl = left[-1] if left else (anchor, r_anchor)
        cut_left = _step(rho, tl, rl, q, ext_lo, False) is not None
    pts = left[::-1] + [(anchor, r_anchor)] + right
    t_vals = np.array([p[0] for p in pts])
    r_vals = np.array([p[1] for p in pts])
    idx = np.arange(-len(left), len(right) + 1)
    if cut_left and cut_right:
        side = "two_sided"
    elif cut_left:
        side = "left_only"
    elif cut_right:
        side = "right_only"
    elif len(pts) > 1:
        side = "finite"
    else:
        side = "empty"
    for arr in (t_vals, r_vals, idx):
        arr.setflags(write=False)
    return BalancedSequence(t_vals, r_vals, idx, float(q), side, (cut_left, cut_right))


# -- discretization check ----------------------------------------------------------

@dataclass(frozen=True)
class EquivalenceBand:
    """Range of ``K(1, t, {rho(t_n)}) / phi(1, t)`` over a grid of ``t``."""

    lower: float
    upper: float
    terms: int

    @property
    def constant(self) -> float:
        """Smallest ``C`` with every ratio in ``[1/C, C]``."""
        return max(self.upper, 1.0 / self.lower)


def equivalence_band(phi: InterpFunction, p0, p1, q: float = 2.0, truncation: int = 20,
                     grid=None, domain=(1e-300, 1e300)) -> EquivalenceBand:
    """Compare ``phi(1, t)`` with the K-functional of ``{rho(t_n)}`` on ``{l_p0, l_p1(1/t_n)}``.

    The balanced grid ``t_n`` is cut to ``|n| <= truncation``; ``grid`` defaults
    to ``t = 2^k`` for ``|k| <= 10``.
    """
    from .kfunc import KFunctional

    if grid is None:
        grid = 2.0 ** np.arange(-10, 11)
    grid = np.asarray(grid, dtype=float)
    seq = balanced_sequence(phi, q, domain).window(truncation)
    kf = KFunctional(Couple.sequence(p0, p1, seq.t_values), seq.rho_values)
    ratios = np.asarray(kf(np.ones_like(grid), grid), dtype=float) / np.asarray(phi.rho(grid), dtype=float)
    return EquivalenceBand(float(ratios.min()), float(ratios.max()), len(seq))
