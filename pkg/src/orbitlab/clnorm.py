"""Calderon-Lozanovskii norms on finite weighted couples.

``||x|| = inf max(||x0||_0, ||x1||_1)`` over ``|x| = phi(|x0|, |x1|)``.
Per atom the representations form the curve ``a(r) = |x|/rho(r)``,
``b(r) = r |x|/rho(r)`` for ``r = b/a > 0``; ``a`` falls and ``b`` rises in ``r``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .phifn import InterpFunction, evaluate
from .spaces import Couple, DomainError, lp_norm

LOG_R_SPAN = 80 * math.log(2.0)
SCAN_POINTS = 64
GOLDEN_STEPS = 90


class MembershipError(ValueError):
    """``x`` admits no representation through ``phi``."""


@dataclass(frozen=True)
class CLResult:
    value: float
    witness0: np.ndarray
    witness1: np.ndarray
    residual: float
    method: str = "bisection"


def _norm(space, v):
    return lp_norm(v * space.weights, space.p, None if math.isinf(space.pf) else space.masses)


def _log_rho(phi: InterpFunction, log_r):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(phi.rho(np.exp(log_r)), dtype=float))


def _result(phi, couple, x, a, b, method):
    c0, c1 = couple.space0, couple.space1
    ax = np.abs(x)
    pos = (a > 0) & (b > 0)
    rep = np.zeros_like(ax)
    if np.any(pos):
        rep[pos] = evaluate(phi, a[pos], b[pos])
    zero_b = (a > 0) & (b == 0)
    if np.any(zero_b):
        # phi(a, 0) = alpha * a; only reached by the theta = 0 power
        rep[zero_b] = a[zero_b] * (1.0 if phi.kind == "power" and phi.theta == 0 else 0.0)
    zero_a = (a == 0) & (b > 0)
    if np.any(zero_a):
        rep[zero_a] = b[zero_a] * (1.0 if phi.kind == "power" and phi.theta == 1 else 0.0)
    residual = float(np.max(np.abs(rep - ax))) if ax.size else 0.0
    value = max(_norm(c0, a), _norm(c1, b))
    return CLResult(float(value), a, b, residual, method)


def cl_norm(phi: InterpFunction, couple: Couple, x, tol: float = 1e-6) -> CLResult:
    """Calderon-Lozanovskii norm with nonnegative witnesses ``(|x0|, |x1|)``."""
    x = couple.space0.check(x)
    ax = np.abs(x)
    zeros = np.zeros_like(ax)
    if not np.any(ax):
        return CLResult(0.0, zeros, zeros.copy(), 0.0, "zero")
    if phi.kind == "power" and phi.theta in (0, 1):
        if phi.theta == 0:
            return _result(phi, couple, x, ax.copy(), zeros, "endpoint")
        return _result(phi, couple, x, zeros, ax.copy(), "endpoint")
    p0, p1 = couple.space0.pf, couple.space1.pf
    if math.isinf(p0) or math.isinf(p1):
        a, b = _solve_sup(phi, couple, ax, tol)
        return _result(phi, couple, x, a, b, "bisection")
    a, b = _solve_scalarized(phi, couple, ax, tol)
    return _result(phi, couple, x, a, b, "scalarized")


# -- at least one sup-norm leg: bisection on the bound ------------------------------

def _monotone_root(phi, target_log, increasing_b: bool, lo, hi, steps=200):
    """Per atom: extreme ``log r`` with ``log b(r) <= target`` or ``log a(r) <= target``.

    ``log b(r) - log|x| = L - log rho(e^L)`` rises in ``L``; the largest root is
    returned for the b-constraint and the smallest for the a-constraint.
    """
    lo = np.full(target_log.shape, lo)
    hi = np.full(target_log.shape, hi)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        lr = _log_rho(phi, mid)
        if increasing_b:
            ok = mid - lr <= target_log
            lo, hi = np.where(ok, mid, lo), np.where(ok, hi, mid)
        else:
            ok = -lr <= target_log
            lo, hi = np.where(ok, lo, mid), np.where(ok, mid, hi)
        if np.all(hi - lo < 1e-14):
            break
    return lo if increasing_b else hi


def _solve_sup(phi, couple, ax, tol):
    c0, c1 = couple.space0, couple.space1
    inf0, inf1 = math.isinf(c0.pf), math.isinf(c1.pf)
    sup = ax > 0
    la = np.log(ax[sup])
    lw0, lw1 = np.log(c0.weights[sup]), np.log(c1.weights[sup])
    span = (-LOG_R_SPAN, LOG_R_SPAN)

    def config(log_c):
        """Cheapest representation meeting the sup-norm bound(s) ``C``; feasibility."""
        if inf1:
            # b_m U1_m <= C  <=>  L - log rho(e^L) <= log C - log U1 - log|x|
            lr_hi = _monotone_root(phi, log_c - lw1 - la, True, *span)
        if inf0:
            lr_lo = _monotone_root(phi, log_c - lw0 - la, False, *span)
        if inf0 and inf1:
            feasible = bool(np.all(lr_lo <= lr_hi + 1e-12))
            L = np.minimum(lr_lo, lr_hi)
        elif inf1:
            L = lr_hi
        else:
            L = lr_lo
        a = np.zeros_like(ax)
        b = np.zeros_like(ax)
        lrho = _log_rho(phi, L)
        a[sup] = np.exp(la - lrho)
        b[sup] = np.exp(la + L - lrho)
        fa, fb = _norm(c0, a), _norm(c1, b)
        if inf0 and inf1:
            ok = feasible and fa <= math.exp(log_c) * (1 + 1e-12) and fb <= math.exp(log_c) * (1 + 1e-12)
        elif inf1:
            ok = fa <= math.exp(log_c) and fb <= math.exp(log_c) * (1 + 1e-12)
        else:
            ok = fb <= math.exp(log_c) and fa <= math.exp(log_c) * (1 + 1e-12)
        return ok, a, b

    # the diagonal r = 1 representation is always admissible
    r1 = float(phi.rho(1.0))
    diag = max(_norm(c0, ax / r1), _norm(c1, ax / r1))
    hi = math.log(diag) + 1e-12
    ok, a_best, b_best = config(hi)
    while not ok:
        hi += 1.0
        ok, a_best, b_best = config(hi)
        if hi > math.log(diag) + 200:
            raise MembershipError("no representation found below the diagonal bound")
    lo = hi - 1.0
    while config(lo)[0]:
        lo -= 1.0
        if lo < hi - 2000:
            raise MembershipError("bound does not stay positive")
    for _ in range(200):
        if hi - lo <= min(tol, 1e-12) * 1e-3:
            break
        mid = 0.5 * (lo + hi)
        ok, a, b = config(mid)
        if ok:
            hi, a_best, b_best = mid, a, b
        else:
            lo = mid
    return a_best, b_best


# -- both legs finite: scalarization ------------------------------------------------

def _golden(f, lo, hi, steps=GOLDEN_STEPS):
    """Vectorized golden-section minimization of a unimodal ``f`` on ``[lo, hi]``."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(steps):
        x1 = hi - g * (hi - lo)
        x2 = lo + g * (hi - lo)
        left = f(x1) <= f(x2)
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
    return 0.5 * (lo + hi)


class _Scalarized:
    """Per-atom minimizers of ``F^p0 + nu G^p1`` along the representation curves."""

    def __init__(self, phi, couple, ax):
        self.phi, self.couple, self.ax = phi, couple, ax
        c0, c1 = couple.space0, couple.space1
        self.p0, self.p1 = c0.pf, c1.pf
        self.sup = ax > 0
        mu = couple.masses[self.sup]
        la = np.log(ax[self.sup])
        self.la = la
        self.lc0 = np.log(mu) + self.p0 * (np.log(c0.weights[self.sup]) + la)
        self.lc1 = np.log(mu) + self.p1 * (np.log(c1.weights[self.sup]) + la)
        self.grid = np.linspace(-LOG_R_SPAN, LOG_R_SPAN, SCAN_POINTS)

    def _objective(self, log_nu, L):
        lr = _log_rho(self.phi, L)
        lc0, lc1 = self.lc0, self.lc1
        if L.ndim == 2:
            lc0, lc1 = lc0[:, None], lc1[:, None]
        return np.logaddexp(lc0 - self.p0 * lr, log_nu + lc1 + self.p1 * (L - lr))

    def log_r(self, log_nu):
        vals = self._objective(log_nu, np.broadcast_to(self.grid, (self.la.size, self.grid.size)))
        k = np.argmin(vals, axis=1)
        step = self.grid[1] - self.grid[0]
        return _golden(lambda L: self._objective(log_nu, L), self.grid[k] - step, self.grid[k] + step)

    def config(self, L):
        a = np.zeros_like(self.ax)
        b = np.zeros_like(self.ax)
        lrho = _log_rho(self.phi, L)
        a[self.sup] = np.exp(self.la - lrho)
        b[self.sup] = np.exp(self.la + L - lrho)
        return a, b

    def gap(self, a, b):
        fa, fb = _norm(self.couple.space0, a), _norm(self.couple.space1, b)
        return fa - fb, max(fa, fb)


def _rescale(phi, ax, a, b):
    """Shrink a feasible ``(a, b)`` so that ``phi(a, b) = |x|`` on every atom."""
    pos = ax > 0
    rep = np.asarray(evaluate(phi, a[pos], b[pos]), dtype=float)
    c = np.ones_like(ax)
    c[pos] = ax[pos] / rep
    return a * c, b * c


def _solve_scalarized(phi, couple, ax, tol):
    sc = _Scalarized(phi, couple, ax)

    def at(log_nu):
        a, b = sc.config(sc.log_r(log_nu))
        d, v = sc.gap(a, b)
        return d, v, a, b

    lo, hi = -8.0, 8.0
    d_lo, v_lo, a_lo, b_lo = at(lo)
    while d_lo > 0 and lo > -3000:
        lo -= 16.0
        d_lo, v_lo, a_lo, b_lo = at(lo)
    d_hi, v_hi, a_hi, b_hi = at(hi)
    while d_hi < 0 and hi < 3000:
        hi += 16.0
        d_hi, v_hi, a_hi, b_hi = at(hi)
    if d_lo > 0 or d_hi < 0:
        # no balance point inside the range: one leg dominates everywhere
        return (a_lo, b_lo) if v_lo <= v_hi else (a_hi, b_hi)
    for _ in range(200):
        if hi - lo < 1e-13 * max(1.0, abs(lo)):
            break
        mid = 0.5 * (lo + hi)
        d, v, a, b = at(mid)
        if d == 0:
            return a, b
        if d < 0:
            lo, d_lo, v_lo, a_lo, b_lo = mid, d, v, a, b
        else:
            hi, d_hi, v_hi, a_hi, b_hi = mid, d, v, a, b
    best = (a_lo, b_lo) if v_lo <= v_hi else (a_hi, b_hi)
    best_v = min(v_lo, v_hi)
    if abs(d_lo) <= tol * v_lo or abs(d_hi) <= tol * v_hi:
        return best
    # a jump in nu: mix the two end configurations (feasible for concave phi)
    lam_lo, lam_hi = 0.0, 1.0
    for _ in range(100):
        lam = 0.5 * (lam_lo + lam_hi)
        a, b = _rescale(phi, ax, (1 - lam) * a_lo + lam * a_hi, (1 - lam) * b_lo + lam * b_hi)
        d, v = sc.gap(a, b)
        if v < best_v:
            best, best_v = (a, b), v
        if d < 0:
            lam_lo = lam
        else:
            lam_hi = lam
    return best


def cl_seq_norm(phi: InterpFunction, r0, r1, u, seq, tol: float = 1e-6) -> CLResult:
    """CL norm of ``seq`` in ``phi(l_r0, l_r1(1/u))`` (unit masses)."""
    u = np.asarray(u, dtype=float).reshape(-1)
    seq = np.asarray(seq, dtype=float).reshape(-1)
    if u.size == 0 or np.any(u <= 0) or np.any(np.diff(u) <= 0):
        raise DomainError("u must be positive and strictly increasing")
    if seq.size != u.size:
        raise DomainError(f"sequence has {seq.size} terms but u has {u.size}")
    return cl_norm(phi, Couple.sequence(r0, r1, u), seq, tol)


# -- validation oracle ----------------------------------------------------------------

def cl_oracle(phi: InterpFunction, couple: Couple, x, max_atoms: int = 3) -> float:
    """Brute-force CL norm over per-atom ratio grids ``log2 r`` in ``[-20, 20]``.

    A tensor grid is zoomed around its incumbent and then polished by SLSQP on
    the epigraph form from several starts. The value returned is always that
    of an explicit representation, hence an upper bound.
    """
    from .kfunc import OracleScaleError, _norm_rows

    x = couple.space0.check(x)
    ax = np.abs(x)
    sup = np.flatnonzero(ax > 0)
    if couple.size > max_atoms:
        raise OracleScaleError(f"cl_oracle supports at most {max_atoms} atoms, got {couple.size}")
    if sup.size == 0:
        return 0.0
    if phi.kind == "power" and phi.theta in (0, 1):
        return cl_norm(phi, couple, x).value
    c0, c1 = couple.space0, couple.space1
    m = sup.size
    lo_box, hi_box = -20.0 * math.log(2), 20.0 * math.log(2)

    def values(rows):
        rows = np.atleast_2d(rows)
        lr = _log_rho(phi, rows)
        a = np.zeros((rows.shape[0], couple.size))
        b = np.zeros_like(a)
        a[:, sup] = ax[sup] * np.exp(-lr)
        b[:, sup] = ax[sup] * np.exp(rows - lr)
        fa = _norm_rows(c0.pf, c0.masses, c0.weights, a)
        fb = _norm_rows(c1.pf, c1.masses, c1.weights, b)
        return np.maximum(fa, fb)

    pts = {1: 2001, 2: 201, 3: 41}[m]
    axis = np.linspace(lo_box, hi_box, pts)
    grid = np.stack(np.meshgrid(*([axis] * m), indexing="ij"), axis=-1).reshape(-1, m)
    vals = values(grid)
    order = np.argsort(vals)
    best, best_val = grid[order[0]], float(vals[order[0]])
    spacing = axis[1] - axis[0]
    steps = np.arange(-3, 4, dtype=float)
    stencil = np.stack(np.meshgrid(*([steps] * m), indexing="ij"), axis=-1).reshape(-1, m)
    edge = np.any(np.abs(stencil) == 3, axis=1)
    while spacing > 1e-10:
        cand = np.clip(best + spacing * stencil, lo_box, hi_box)
        v = values(cand)
        k = int(np.argmin(v))
        moved = v[k] < best_val
        if moved:
            best, best_val = cand[k], float(v[k])
        if not (moved and edge[k]):
            spacing /= 3.0
    for start in [best] + [grid[i] for i in order[:3]]:
        theta = _epigraph_polish(phi, couple, ax, sup, start, best_val, lo_box, hi_box)
        best_val = min(best_val, float(values(theta)[0]))
    return best_val


def _epigraph_polish(phi, couple, ax, sup, start, scale, lo_box, hi_box):
    from scipy.optimize import minimize

    c0, c1 = couple.space0, couple.space1
    m = sup.size
    xs = ax[sup]
    mu = couple.masses[sup]
    w0, w1 = c0.weights[sup], c1.weights[sup]

    def legs(L):
        lr = _log_rho(phi, L)
        return xs * np.exp(-lr) * w0 / scale, xs * np.exp(L - lr) * w1 / scale

    def leg_constraints(tau, v, p):
        if math.isinf(p):
            return tau - v
        return np.array([tau - lp_norm(v, p, mu)])

    def cons(z):
        v0, v1 = legs(z[:m])
        return np.concatenate([leg_constraints(z[m], v0, c0.pf), leg_constraints(z[m], v1, c1.pf)])

    z0 = np.concatenate([start, [1.0]])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(lambda z: z[m], z0, method="SLSQP",
                       bounds=[(lo_box, hi_box)] * m + [(0.0, None)],
                       constraints=[{"type": "ineq", "fun": cons}],
                       options={"ftol": 1e-14, "maxiter": 500})
    return np.clip(res.x[:m], lo_box, hi_box)
