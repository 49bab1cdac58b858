"""Peetre K-functional on finite weighted couples.

By lattice monotonicity an optimal splitting ``x = x0 + x1`` can be taken with
``x0 = theta * x``, ``theta`` in ``[0, 1]`` per atom. The optimal splittings
for all ``t`` form a one-parameter family:

* ``p0, p1`` in ``(1, inf)``: stationary points of ``F0(y) + lam*F1(a - y)``
  (``F`` the p-th power sums), which is separable per atom;
* ``p0 = 1 < p1 < inf``: ``x1 = min(|x|, c*kappa)`` with ``c`` fixed by the weights;
* ``p0 = inf``: ``x1 = (|x| - A/U0)_+`` for a threshold ``A``.

Every family member is exactly optimal for one ``t`` (its tangent slope), so
``K(1, t)`` is found by a root search on the family parameter. Remaining exponent
pairs are handled by the swap ``K(s, t; X0, X1) = K(t, s; X1, X0)`` or by
exact vertex enumeration where ``K`` is piecewise linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .spaces import INF, Couple

MAX_EVALUATIONS = 100_000
PROFILE_STEP = 0.05
PROFILE_RTOL = 1e-10
MAX_PROFILE_NODES = 50_000


class SolverError(RuntimeError):
    """The iteration cap was hit; carries the best bracket found."""

    def __init__(self, message, lower=None, upper=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class OracleScaleError(ValueError):
    """Exhaustive oracle called on a problem larger than its cost guard."""


@dataclass(frozen=True)
class KResult:
    value: float
    x0: np.ndarray
    x1: np.ndarray
    method: str


def _logsig(v):
    return -np.logaddexp(0.0, -v)


def logsumexp(v, axis=-1):
    top = np.max(v, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(v - top), axis=axis)) + np.squeeze(top, axis)
    return out


def _log_norm(p: float, log_mu, log_w, log_v):
    """log of the weighted p-norm given log|v| (rows are independent)."""
    with np.errstate(invalid="ignore"):
        if math.isinf(p):
            return np.max(log_w + log_v, axis=-1)
        return logsumexp(log_mu + p * (log_w + log_v), axis=-1) / p


def _norm_rows(p: float, mu, w, v):
    v = np.abs(v) * w
    top = v.max(axis=-1)
    if math.isinf(p):
        return top
    safe = np.where(top > 0, top, 1.0)
    return top * ((v / safe[..., None]) ** p * mu).sum(axis=-1) ** (1.0 / p)


def _hermite(nodes, f, d, x, i):
    """Cubic Hermite interpolant on interval ``i`` (values ``f``, slopes ``d``)."""
    h = nodes[i + 1] - nodes[i]
    u = (x - nodes[i]) / h
    return ((1 + 2 * u) * (1 - u) ** 2 * f[i] + u * (1 - u) ** 2 * h * d[i]
            + u * u * (3 - 2 * u) * f[i + 1] + u * u * (u - 1) * h * d[i + 1])


class _Family:
    """One-parameter family of optimal splittings of ``a = |x| > 0``.

    ``point(params)`` returns ``(y0, y1, A, B, logT)`` with ``y0 + y1 = a``,
    ``A = ||y0||_0``, ``B = ||y1||_1`` and ``T`` the ``t`` for which the
    splitting minimizes ``||y0||_0 + t ||y1||_1``. ``T`` is nondecreasing in
    the parameter over ``[lo, hi]``.
    """

    lo: float
    hi: float

    def __init__(self, a, mu, u0, u1, p0, p1):
        self.a, self.mu, self.u0, self.u1 = a, mu, u0, u1
        self.p0, self.p1 = p0, p1
        self.la, self.lmu = np.log(a), np.log(mu)
        self.lu0, self.lu1 = np.log(u0), np.log(u1)


class _LambdaFamily(_Family):
    def __init__(self, *args):
        super().__init__(*args)
        p0, p1 = self.p0, self.p1
        self.c = (math.log(p0) + p0 * self.lu0 + (p0 - 1) * self.la
                  - math.log(p1) - p1 * self.lu1 - (p1 - 1) * self.la)
        self.slope = min(p0 - 1.0, p1 - 1.0)
        self.lo, self.hi = self._bracket()

    def _logit(self, u):
        u = np.asarray(u, dtype=float)[:, None]
        p0, p1 = self.p0, self.p1
        if p0 == p1:
            return (u + p0 * (self.lu1 - self.lu0)) / (p0 - 1)
        # solve g(v) = 0, g increasing with slope >= self.slope
        base = self.c - u
        g0 = base - (p0 - 1) * math.log(2) + (p1 - 1) * math.log(2)
        half = np.abs(g0) / self.slope + 1.0
        lo, hi = -half, half
        v = np.zeros_like(base)
        for _ in range(100):
            g = base + (p0 - 1) * _logsig(v) - (p1 - 1) * _logsig(-v)
            pos = g > 0
            hi = np.where(pos, v, hi)
            lo = np.where(pos, lo, v)
            dg = (p0 - 1) * np.exp(_logsig(-v)) + (p1 - 1) * np.exp(_logsig(v))
            new = v - g / dg
            # safeguarded Newton: bisect when the step leaves the bracket
            new = np.where((new >= lo) & (new <= hi), new, 0.5 * (lo + hi))
            step = np.abs(new - v)
            v = new
            if np.all(step <= 1e-15 * (1.0 + np.abs(v))):
                break
        return v

    def point(self, u):
        u = np.asarray(u, dtype=float)
        v = self._logit(u)
        ly0 = self.la + _logsig(v)
        ly1 = self.la + _logsig(-v)
        log_a = _log_norm(self.p0, self.lmu, self.lu0, ly0)
        log_b = _log_norm(self.p1, self.lmu, self.lu1, ly1)
        log_t = (u + math.log(self.p1) + (self.p1 - 1) * log_b
                 - math.log(self.p0) - (self.p0 - 1) * log_a)
        return np.exp(ly0), np.exp(ly1), np.exp(log_a), np.exp(log_b), log_t

    def _bracket(self):
        # expand until T saturates at both ends (finite atoms: K is linear
        # near 0 and constant near infinity)
        lo, hi = -32.0, 32.0
        for _ in range(12):
            t_lo = self.point(np.array([lo, 2 * lo]))[4]
            if abs(t_lo[1] - t_lo[0]) < 1e-14 * max(1.0, abs(t_lo[0])):
                break
            lo *= 2
        for _ in range(12):
            t_hi = self.point(np.array([hi, 2 * hi]))[4]
            if abs(t_hi[1] - t_hi[0]) < 1e-14 * max(1.0, abs(t_hi[0])):
                break
            hi *= 2
        return lo, hi


class _KappaFamily(_Family):
    """``p0 = 1``, ``1 < p1 < inf``; parameter ``u = -log(kappa)``."""

    def __init__(self, *args):
        super().__init__(*args)
        p1 = self.p1
        self.lc = (self.lu0 - p1 * self.lu1) / (p1 - 1)
        ratio = self.la - self.lc
        self.lo, self.hi = float(-ratio.max()), float(-ratio.min())

    def point(self, u):
        u = np.asarray(u, dtype=float)[:, None]
        lz = np.minimum(self.la, self.lc - u)
        z = np.exp(lz)
        y0 = np.maximum(self.a - z, 0.0)
        y0 = np.where(lz >= self.la, 0.0, y0)
        log_b = _log_norm(self.p1, self.lmu, self.lu1, lz)
        big_a = (self.mu * self.u0 * y0).sum(axis=-1)
        log_t = (self.p1 - 1) * (log_b + u[:, 0])
        return y0, z, big_a, np.exp(log_b), log_t


class _ThresholdFamily(_Family):
    """``p0 = inf``, ``1 < p1 < inf``; parameter is the sup-norm bound ``A``."""

    def __init__(self, *args):
        super().__init__(*args)
        self.lo, self.hi = 0.0, float((self.a * self.u0).max())

    def point(self, big_a):
        big_a = np.asarray(big_a, dtype=float)[:, None]
        cap = big_a / self.u0
        y0 = np.minimum(self.a, cap)
        z = np.maximum(self.a - cap, 0.0)
        with np.errstate(divide="ignore"):
            lz = np.log(z)
        log_b = _log_norm(self.p1, self.lmu, self.lu1, lz)
        with np.errstate(invalid="ignore"):
            denom = logsumexp(self.lmu + self.p1 * self.lu1 + (self.p1 - 1) * lz - self.lu0, axis=-1)
            log_t = (self.p1 - 1) * log_b - denom
        log_t = np.where(np.isfinite(log_t), log_t, np.inf)
        norm_a = (y0 * self.u0).max(axis=-1)
        return y0, z, norm_a, np.exp(log_b), log_t


class _Envelope:
    """Lower envelope of lines ``A_i + t B_i``: a concave piecewise-linear function."""

    def __init__(self, big_a, big_b):
        order = np.lexsort((big_a, -big_b))
        big_a, big_b = np.asarray(big_a)[order], np.asarray(big_b)[order]
        keep_a, keep_b = [], []
        for av, bv in zip(big_a, big_b):
            if keep_b and bv == keep_b[-1]:
                continue  # same slope, larger intercept (lexsort)
            while keep_a:
                # crossing of new line with last kept line
                x_new = (av - keep_a[-1]) / (keep_b[-1] - bv)
                if len(keep_a) >= 2:
                    x_prev = (keep_a[-1] - keep_a[-2]) / (keep_b[-2] - keep_b[-1])
                    if x_new <= x_prev:
                        keep_a.pop()
                        keep_b.pop()
                        continue
                if x_new <= 0:
                    keep_a.pop()
                    keep_b.pop()
                    continue
                break
            keep_a.append(av)
            keep_b.append(bv)
        self.A = np.array(keep_a)
        self.B = np.array(keep_b)
        self.breaks = (self.A[1:] - self.A[:-1]) / (self.B[:-1] - self.B[1:])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.breaks, t)
        return self.A[idx] + t * self.B[idx]

    def __len__(self):
        return self.A.size


class KFunctional:
    """``K(s, t, x; couple)`` for a fixed couple and element.

    Evaluation is vectorized over ``t`` and solves to machine precision.
    ``envelope`` keeps exact tangent lines, which suffice for the
    piecewise-linear kinds.
    """

    def __init__(self, couple: Couple, x):
        self.couple = couple
        self.x = couple.space0.check(x).copy()
        self.support = np.flatnonzero(self.x != 0)
        s0, s1 = couple.space0, couple.space1
        self.norm0 = s0.norm(self.x)
        self.norm1 = s1.norm(self.x)
        sup = self.support
        self._a = np.abs(self.x[sup])
        self._mu = couple.masses[sup]
        self._w0 = s0.weights[sup]
        self._w1 = s1.weights[sup]
        self._p0, self._p1 = s0.pf, s1.pf
        self._swap = False
        self.kind = self._classify()

    def _classify(self) -> str:
        p0, p1 = self._p0, self._p1
        if self.support.size == 0:
            return "zero"
        if self.couple.space0 == self.couple.space1:
            return "equal"
        if self.support.size == 1:
            return "single"
        if p0 == 1 and p1 == 1:
            return "l1"
        swap = (math.isinf(p1) and not math.isinf(p0)) or (p1 == 1 and 1 < p0 < INF)
        if swap:
            self._swap = True
            self._p0, self._p1 = p1, p0
            self._w0, self._w1 = self._w1, self._w0
            p0, p1 = self._p0, self._p1
        args = (self._a, self._mu, self._w0, self._w1, p0, p1)
        if math.isinf(p0):
            if p1 == 1 or math.isinf(p1):
                return "vertices"
            self._family = _ThresholdFamily(*args)
            return "threshold"
        if p0 == 1:
            self._family = _KappaFamily(*args)
            return "kappa"
        self._family = _LambdaFamily(*args)
        return "lambda"

    # -- exact vertex enumeration (p0 = inf, p1 in {1, inf}) ---------------
    @cached_property
    def _vertices(self):
        a, w0, w1 = self._a, self._w0, self._w1
        cands = [np.zeros(1), a * w0]
        if math.isinf(self._p1):
            i, j = np.triu_indices(a.size, 1)
            den = w1[i] / w0[i] - w1[j] / w0[j]
            with np.errstate(divide="ignore", invalid="ignore"):
                cross = (w1[i] * a[i] - w1[j] * a[j]) / den
            cands.append(cross[np.isfinite(cross)])
        big = np.concatenate(cands)
        big = np.unique(big[(big >= 0) & (big <= (a * w0).max())])
        cap = big[:, None] / w0
        y0 = np.minimum(a, cap)
        y1 = np.maximum(a - cap, 0.0)
        norm_a = (y0 * w0).max(axis=1)
        norm_b = _norm_rows(self._p1, self._mu, w1, y1)
        return y0, y1, norm_a, norm_b

    def _solve_unit(self, t):
        """Optimal ``(y0, y1, A, B)`` for ``min A + t B`` in working coordinates."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        a = self._a
        n = t.size
        if self.kind == "vertices":
            y0, y1, big_a, big_b = self._vertices
            best = np.argmin(big_a[None, :] + t[:, None] * big_b[None, :], axis=1)
            return y0[best], y1[best], big_a[best], big_b[best]
        fam = self._family
        lo, hi = self._illinois(np.log(t))
        # candidates: both bracket ends and the two trivial splittings
        y0l, y1l, al, bl, _ = fam.point(lo)
        y0h, y1h, ah, bh, _ = fam.point(hi)
        zero0 = np.zeros_like(a)
        n0 = _norm_rows(self._p0, self._mu, self._w0, a[None, :])[0]
        n1 = _norm_rows(self._p1, self._mu, self._w1, a[None, :])[0]
        vals = np.stack([al + t * bl, ah + t * bh, t * n1, np.full(n, n0)])
        pick = np.argmin(vals, axis=0)
        y0 = np.where((pick == 0)[:, None], y0l, y0h)
        y1 = np.where((pick == 0)[:, None], y1l, y1h)
        big_a = np.where(pick == 0, al, ah)
        big_b = np.where(pick == 0, bl, bh)
        y0 = np.where((pick == 2)[:, None], zero0, y0)
        y1 = np.where((pick == 2)[:, None], a, y1)
        big_a = np.where(pick == 2, 0.0, big_a)
        big_b = np.where(pick == 2, n1, big_b)
        y0 = np.where((pick == 3)[:, None], a, y0)
        y1 = np.where((pick == 3)[:, None], zero0, y1)
        big_a = np.where(pick == 3, n0, big_a)
        big_b = np.where(pick == 3, 0.0, big_b)
        return y0, y1, big_a, big_b

    @cached_property
    def _table(self):
        """Coarse ``(param, log T)`` nodes used to bracket the family parameter."""
        fam = self._family
        params = np.linspace(fam.lo, fam.hi, 257)
        log_t = fam.point(params)[4]
        if not np.isfinite(log_t[-1]):
            # T has a finite limit where the last atom empties; K is flat beyond it
            params[-1] = fam.hi - 1e-12 * (fam.hi - fam.lo)
            log_t[-1] = fam.point(params[-1:])[4][0]
        ok = np.isfinite(log_t)
        return params[ok], np.maximum.accumulate(log_t[ok])

    def _illinois(self, log_t):
        """Bracket the parameter whose tangent slope is ``t`` (Illinois false position)."""
        fam = self._family
        params, nodes = self._table
        k = np.searchsorted(nodes, log_t)
        last = params.size - 1
        beyond = k > last
        lo = np.where(beyond, fam.hi, params[np.clip(k - 1, 0, last)])
        hi = np.where(beyond, fam.hi, params[np.clip(k, 0, last)])
        f_lo = np.where(k > 0, nodes[np.clip(k - 1, 0, last)] - log_t, -1.0)
        f_hi = nodes[np.clip(k, 0, last)] - log_t
        side = np.zeros(log_t.size)
        evaluations = 0
        for _ in range(200):
            width = hi - lo
            open_ = width > 4e-16 * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi))) + 1e-300
            open_ &= (f_lo < -1e-13) & (f_hi > 1e-13)
            if not open_.any():
                break
            idx = np.flatnonzero(open_)
            l, h, fl, fh = lo[idx], hi[idx], f_lo[idx], f_hi[idx]
            with np.errstate(invalid="ignore", divide="ignore"):
                x = l - fl * (h - l) / (fh - fl)
            inside = np.isfinite(x) & (x > l) & (x < h)
            x = np.where(inside, x, 0.5 * (l + h))
            f = fam.point(x)[4] - log_t[idx]
            evaluations += idx.size
            up = f >= 0
            sd = side[idx]
            # Illinois: halve the stale end when the same end moves twice
            fl_new = np.where(up, np.where(sd == 1, 0.5 * fl, fl), f)
            fh_new = np.where(up, f, np.where(sd == -1, 0.5 * fh, fh))
            lo[idx] = np.where(up, l, x)
            hi[idx] = np.where(up, x, h)
            f_lo[idx] = np.where(up, fl_new, f)
            f_hi[idx] = np.where(up, f, fh_new)
            side[idx] = np.where(up, 1, -1)
        if evaluations > MAX_EVALUATIONS * max(1, log_t.size):
            raise SolverError("K parameter search exceeded its evaluation cap", lo, hi)
        return lo, hi

    def _closed(self, s, t):
        """Values and x0-fractions for the closed-form kinds."""
        x = self.x
        if self.kind == "zero":
            return np.zeros_like(t), np.zeros((t.size, x.size))
        if self.kind == "equal":
            take0 = (s <= t)
            theta = np.where(take0[:, None], 1.0, 0.0) * np.ones(x.size)
            return np.minimum(s, t) * self.norm0, theta
        if self.kind == "single":
            v0, v1 = s * self.norm0, t * self.norm1
            theta = np.where((v0 <= v1)[:, None], 1.0, 0.0) * np.ones(x.size)
            return np.minimum(v0, v1), theta
        # l1: pointwise min of s*U0 and t*U1
        c = self.couple
        c0 = s[:, None] * c.space0.weights
        c1 = t[:, None] * c.space1.weights
        vals = (c.masses * np.abs(x) * np.minimum(c0, c1)).sum(axis=1)
        return vals, (c0 <= c1).astype(float)

    def _split(self, s, t):
        """Vectorized optimal splitting: returns (values, x0 rows)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        s, t = np.broadcast_arrays(s, t)
        s, t = s.ravel(), t.ravel()
        if self.kind in ("zero", "equal", "single", "l1"):
            vals, theta = self._closed(s, t)
            return vals, theta * self.x
        if self._swap:
            y1, y0, big_b, big_a = self._solve_unit(s / t)
        else:
            y0, y1, big_a, big_b = self._solve_unit(t / s)
        x0 = np.zeros((s.size, self.x.size))
        x0[:, self.support] = y0 * np.sign(self.x[self.support])
        return s * big_a + t * big_b, x0

    def __call__(self, s, t):
        s_arr, t_arr = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        vals, _ = self._split(s_arr, t_arr)
        return vals.reshape(s_arr.shape) if s_arr.ndim else float(vals[0])

    @property
    def method(self) -> str:
        return "closed_form" if self.kind in ("zero", "equal", "single", "l1", "vertices") else "convex"

    def decompose(self, s: float, t: float) -> KResult:
        vals, x0 = self._split(s, t)
        x0 = x0[0]
        x1 = self.x - x0
        value = s * self.couple.space0.norm(x0) + t * self.couple.space1.norm(x1)
        value = min(value, float(vals[0])) if self.kind == "zero" else value
        return KResult(float(value), x0, x1, self.method)

    # -- tabulated profile -------------------------------------------------
    @cached_property
    def envelope(self) -> _Envelope:
        """Exact tangent lines of ``t -> K(1, t)`` (coarse for the smooth kinds)."""
        if self.kind == "zero":
            return _Envelope(np.zeros(1), np.zeros(1))
        lines_a = [0.0, self.norm0]
        lines_b = [self.norm1, 0.0]
        if self.kind in ("equal", "single"):
            return _Envelope(np.array(lines_a), np.array(lines_b))
        if self.kind == "l1":
            c = self.couple
            ratio = c.space0.weights / c.space1.weights
            knots = np.unique(ratio[self.support])
            a_rows, b_rows = [], []
            for k in knots:
                take0 = ratio <= k
                m = c.masses * np.abs(self.x)
                a_rows.append(float((m * c.space0.weights * take0).sum()))
                b_rows.append(float((m * c.space1.weights * ~take0).sum()))
            return _Envelope(np.array(lines_a + a_rows), np.array(lines_b + b_rows))
        if self.kind == "vertices":
            _, _, big_a, big_b = self._vertices
        else:
            _, _, big_a, big_b, _ = self._family.point(self._table[0])
        if self._swap:
            big_a, big_b = big_b, big_a
        return _Envelope(np.concatenate([lines_a, big_a]), np.concatenate([lines_b, big_b]))

    @property
    def _family_kind(self) -> bool:
        return self.kind in ("lambda", "kappa", "threshold")

    def _lines(self, t):
        """Exact ``(A, B)`` with ``K(1, t) = A + t B`` and ``dK/dt = B``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self._swap:
            _, _, big_b, big_a = self._solve_unit(1.0 / t)
        else:
            _, _, big_a, big_b = self._solve_unit(t)
        return big_a, big_b

    def _kink_log_t(self):
        """``log t`` where the active atom set changes (``K`` is only C1 there)."""
        fam = self._family
        if self.kind == "kappa":
            params = -(fam.la - fam.lc)
        elif self.kind == "threshold":
            params = fam.a * fam.u0
            params = params[params < fam.hi]
        else:
            return np.zeros(0)
        log_t = fam.point(params)[4]
        log_t = log_t[np.isfinite(log_t)]
        return -log_t if self._swap else log_t

    def _exact_log(self, log_t):
        t = np.exp(log_t)
        big_a, big_b = self._lines(t)
        k = big_a + t * big_b
        return np.log(k), t * big_b / k

    @cached_property
    def _profile(self):
        """Cubic Hermite table of ``log K`` against ``log t`` with exact slopes,
        bisected until midpoints match the exact solve to ``PROFILE_RTOL``."""
        lo, hi = np.log(self.t_range)
        if not hi - lo > 1e-9:
            return None
        n = max(16, math.ceil((hi - lo) / PROFILE_STEP)) + 1
        kinks = self._kink_log_t()
        nodes = np.unique(np.concatenate([np.linspace(lo, hi, n), kinks[(kinks > lo) & (kinks < hi)]]))
        f, d = self._exact_log(nodes)
        check = np.arange(nodes.size - 1)
        while check.size and nodes.size < MAX_PROFILE_NODES:
            mid = 0.5 * (nodes[check] + nodes[check + 1])
            fm, dm = self._exact_log(mid)
            approx = _hermite(nodes, f, d, mid, check)
            bad = (np.abs(approx - fm) > PROFILE_RTOL) & (nodes[check + 1] - nodes[check] > 1e-12)
            if not bad.any():
                break
            nodes = np.concatenate([nodes, mid[bad]])
            f = np.concatenate([f, fm[bad]])
            d = np.concatenate([d, dm[bad]])
            order = np.argsort(nodes)
            nodes, f, d = nodes[order], f[order], d[order]
            # the two halves of every refined interval are checked next
            pos = np.flatnonzero(np.isin(nodes, mid[bad]))
            check = np.concatenate([pos - 1, pos])
        return nodes, f, d

    def rho(self, t):
        """Fast ``K(1, t)``: exact lines for the piecewise-linear kinds, else a
        Hermite profile between exact nodes (exact outside ``t_range``)."""
        if not self._family_kind:
            return self.envelope(t)
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        out = np.minimum(flat * self.norm1, self.norm0)
        prof = self._profile
        lo, hi = self.t_range
        inner = (flat > lo) & (flat < hi)
        if prof is not None and inner.any():
            nodes, f, d = prof
            lt = np.log(flat[inner])
            i = np.clip(np.searchsorted(nodes, lt) - 1, 0, nodes.size - 2)
            out[inner] = np.minimum(out[inner], np.exp(_hermite(nodes, f, d, lt, i)))
        return out.reshape(t.shape) if t.ndim else float(out[0])

    @property
    def t_range(self) -> tuple[float, float]:
        """Range of ``t`` outside which ``K(1, t)`` is linear in ``t`` or constant."""
        if self._family_kind:
            nodes = self._table[1]
            lo, hi = float(np.exp(nodes[0])), float(np.exp(nodes[-1]))
            return (1.0 / hi, 1.0 / lo) if self._swap else (lo, hi)
        env = self.envelope
        if env.breaks.size == 0:
            return (1.0, 1.0)
        return float(env.breaks[0]), float(env.breaks[-1])


def k_at(couple: Couple, x, s: float, t: float, tol: float = 1e-8) -> KResult:
    """``K(s, t, x; couple)`` with a witnessing splitting ``x = x0 + x1``."""
    if not (s > 0 and t > 0):
        raise ValueError(f"s and t must be positive, got s={s}, t={t}")
    return KFunctional(couple, x).decompose(s, t)


def k_profile(couple: Couple, x, t_grid) -> list[tuple[float, float]]:
    """``[(t, K(1, t, x)) for t in t_grid]``."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0) or np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be positive and ascending")
    vals = KFunctional(couple, x)(np.ones_like(t_grid), t_grid)
    return list(zip(t_grid.tolist(), np.atleast_1d(vals).tolist()))


# -- independent oracle ------------------------------------------------------

def _objective_rows(couple: Couple, x, s, t, theta):
    x0 = theta * x
    x1 = x - x0
    c0, c1 = couple.space0, couple.space1
    n0 = _norm_rows(c0.pf, c0.masses, c0.weights, x0)
    n1 = _norm_rows(c1.pf, c1.masses, c1.weights, x1)
    return s * n0 + t * n1


def k_oracle(couple: Couple, x, s: float, t: float, free_sign: bool = False,
             max_atoms: int = 4) -> float:
    """Brute-force K: zooming grid search over ``x0 = theta * x``.

    ``theta`` ranges over ``[0, 1]`` per atom, or ``[-1, 2]`` with
    ``free_sign``. Refinement continues to resolution 1e-4 and is then
    polished by coordinate ternary search alternating with further zooms,
    followed by a multi-start SLSQP polish. Every candidate is evaluated on
    the true objective, so the result is an upper bound on K.
    """
    x = couple.space0.check(x)
    if couple.size > max_atoms:
        raise OracleScaleError(f"k_oracle supports at most {max_atoms} atoms, got {couple.size}")
    active = np.flatnonzero(x != 0)
    if active.size == 0:
        return 0.0
    lo_box, hi_box = (-1.0, 2.0) if free_sign else (0.0, 1.0)
    m = active.size
    full = np.zeros(couple.size)

    def f(rows):
        th = np.tile(full, (rows.shape[0], 1))
        th[:, active] = rows
        return _objective_rows(couple, x, s, t, th)

    pts = 11
    axes = [np.linspace(lo_box, hi_box, pts)] * m
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
    vals = f(grid)
    coarse, coarse_vals = grid, vals
    best = grid[np.argmin(vals)]
    best_val = float(vals.min())
    spacing = (hi_box - lo_box) / (pts - 1)
    steps = np.arange(-3, 4, dtype=float)
    stencil = np.stack(np.meshgrid(*([steps] * m), indexing="ij"), axis=-1).reshape(-1, m)
    edge = np.any(np.abs(stencil) == 3, axis=1)
    polished = False
    for _ in range(2000):
        if spacing <= 1e-13:
            break
        grid = np.clip(best + spacing * stencil, lo_box, hi_box)
        vals = f(grid)
        k = int(np.argmin(vals))
        moved = vals[k] < best_val
        if moved:
            best, best_val = grid[k], float(vals[k])
        # shrink only when the incumbent is interior to the stencil
        if not (moved and edge[k]):
            spacing /= 3.0
        if spacing < 1e-4 and not polished:
            polished = True
            best, best_val = _ternary_polish(f, best, best_val, spacing, lo_box, hi_box)
    best, best_val = _ternary_polish(f, best, best_val, max(spacing, 1e-12), lo_box, hi_box)
    # the objective is convex but has cone points where a leg vanishes, so a
    # local NLP polish is restarted from interior points as well
    starts = [best, np.full(m, 0.5 * (lo_box + hi_box))]
    starts += [g for g in coarse[np.argsort(coarse_vals)[:3]]]
    for start in starts:
        theta = _slsqp_polish(couple, x[active], active, s, t, start, lo_box, hi_box)
        best_val = min(best_val, float(f(theta[None, :])[0]))
    return best_val


def _slsqp_polish(couple, xa, active, s, t, theta0, lo_box, hi_box):
    """Local NLP polish in theta, with epigraph scalars for sup-norm legs."""
    from scipy.optimize import minimize

    c0, c1 = couple.space0, couple.space1
    mu = couple.masses[active]
    w0, w1 = c0.weights[active], c1.weights[active]
    inf0, inf1 = math.isinf(c0.pf), math.isinf(c1.pf)
    m = xa.size

    def legs(z):
        th = z[:m]
        return th * xa * w0, (1.0 - th) * xa * w1

    def obj(z):
        v0, v1 = legs(z)
        k = m
        total = 0.0
        if inf0:
            total += s * z[k]
            k += 1
        else:
            total += s * _norm_rows(c0.pf, mu, np.ones(m), v0[None, :])[0]
        if inf1:
            total += t * z[k]
        else:
            total += t * _norm_rows(c1.pf, mu, np.ones(m), v1[None, :])[0]
        return total

    def cons(z):
        v0, v1 = legs(z)
        out = []
        k = m
        if inf0:
            out += [z[k] - v0, z[k] + v0]
            k += 1
        if inf1:
            out += [z[k] - v1, z[k] + v1]
        return np.concatenate(out) if out else np.zeros(1)

    z0 = list(theta0)
    v0, v1 = legs(np.asarray(theta0))
    if inf0:
        z0.append(np.abs(v0).max())
    if inf1:
        z0.append(np.abs(v1).max())
    bounds = [(lo_box, hi_box)] * m + [(0, None)] * (len(z0) - m)
    res = minimize(obj, np.array(z0), method="SLSQP", bounds=bounds,
                   constraints=[{"type": "ineq", "fun": cons}],
                   options={"ftol": 1e-15, "maxiter": 500})
    return np.clip(res.x[:m], lo_box, hi_box)


def _ternary_polish(f, best, best_val, spacing, lo_box, hi_box):
    for i in range(best.size):
        a_, b_ = max(lo_box, best[i] - 4 * spacing), min(hi_box, best[i] + 4 * spacing)
        for _ in range(40):
            c1 = a_ + (b_ - a_) / 3
            c2 = b_ - (b_ - a_) / 3
            trial = np.tile(best, (2, 1))
            trial[0, i], trial[1, i] = c1, c2
            v = f(trial)
            if v[0] <= v[1]:
                b_ = c2
            else:
                a_ = c1
        trial = best.copy()
        trial[i] = 0.5 * (a_ + b_)
        v = float(f(trial[None, :])[0])
        if v <= best_val:
            best, best_val = trial, v
    return best, best_val
