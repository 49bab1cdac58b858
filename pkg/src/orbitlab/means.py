"""Method-of-means norms.

The production path evaluates the K-profile ``psi(t) = K(1, t, x)`` on a
balanced grid ``u_m`` of ``psi`` and takes the CL norm of ``{psi(u_m)}`` in
``phi(l_p0, l_p1(1/u_m))``. The direct path solves the defining convex
program over representations ``x = sum rho(t_n) w_n`` and serves as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .clnorm import CLResult, cl_seq_norm
from .kfunc import KFunctional, OracleScaleError, SolverError
from .phifn import (DEFAULT_DOMAIN, BalancedSequence, ClassificationError,
                    InterpFunction, balanced_sequence, classify)
from .spaces import Couple, exponent


@dataclass(frozen=True)
class MeansResult:
    value: float
    path: str
    degenerate_case: str
    balanced_u: Optional[BalancedSequence] = None
    k_seq: Optional[np.ndarray] = None
    cl: Optional[CLResult] = None
    components: dict = field(default_factory=dict)


def profile_domain(kf: KFunctional, domain=DEFAULT_DOMAIN):
    """A domain covering both the default window and the profile's kinks."""
    t_lo, t_hi = kf.t_range
    return (min(domain[0], t_lo / 16), max(domain[1], t_hi * 16))


def k_characterization(phi: InterpFunction, couple: Couple, p0, p1, x, q: float = 2.0,
                       domain=DEFAULT_DOMAIN, tol: float = 1e-6):
    """``(value, u, psi(u), cl)`` for the K-profile of ``x`` on its balanced grid."""
    kf = KFunctional(couple, x)
    psi = InterpFunction("k_derived", kfunc=kf, label="psi")
    dom = profile_domain(kf, domain)
    if not classify(psi, dom).in_Phi0:
        raise ClassificationError("the K-profile of x is not in Phi0")
    u = balanced_sequence(psi, q, dom)
    k_seq = np.asarray(kf(np.ones_like(u.t_values), u.t_values), dtype=float).reshape(-1)
    cl = cl_seq_norm(phi, p0, p1, u.t_values, k_seq, tol)
    return cl.value, u, k_seq, cl


def means_norm(phi: InterpFunction, couple: Couple, p0, p1, x, q: float = 2.0,
               domain=DEFAULT_DOMAIN, tol: float = 1e-6) -> MeansResult:
    """``||x||`` in ``phi(X0, X1)_{p0,p1}`` with the degenerate cases split off first."""
    p0, p1 = exponent(p0), exponent(p1)
    x = couple.space0.check(x)
    if not np.any(x):
        return MeansResult(0.0, "lemma2", "none")
    cls = classify(phi, domain)
    n0, n1 = couple.norms(x)
    if cls.alpha > 0 and cls.beta > 0:
        kf = KFunctional(couple, x)
        return MeansResult(float(kf(1.0, 1.0)), "lemma2", "sum_space")
    if cls.alpha > 0 or cls.beta > 0:
        raise ClassificationError(
            f"phi has a linear part on one side only (alpha={cls.alpha:.6g}, beta={cls.beta:.6g})",
            (cls.alpha, cls.beta))
    if cls.both_bounded:
        return MeansResult(max(n0, n1), "lemma2", "intersection",
                           components={"norm0": n0, "norm1": n1})
    value, u, k_seq, cl = k_characterization(phi, couple, p0, p1, x, q, domain, tol)
    if cls.bounded[0]:
        return MeansResult(max(value, n0), "lemma2", "one_sided_left", u, k_seq, cl,
                           {"k_characterization": value, "norm0": n0})
    if cls.bounded[1]:
        return MeansResult(max(value, n1), "lemma2", "one_sided_right", u, k_seq, cl,
                           {"k_characterization": value, "norm1": n1})
    return MeansResult(value, "lemma2", "none", u, k_seq, cl)


def means_norm_direct(phi: InterpFunction, couple: Couple, p0, p1, x,
                      t_seq: BalancedSequence, truncation: int,
                      max_atoms: int = 3, max_truncation: int = 6) -> float:
    """Infimum over ``x = sum_{|n| <= N} rho(t_n) w_n`` of the larger of
    ``||(||w_n||_0)||_p0`` and ``||(t_n ||w_n||_1)||_p1``, solved as a cone program."""
    import cvxpy as cp

    x = couple.space0.check(x)
    if couple.size > max_atoms or truncation > max_truncation:
        raise OracleScaleError(
            f"direct means solver limited to {max_atoms} atoms and N <= {max_truncation}")
    if not np.any(x):
        return 0.0
    p0, p1 = exponent(p0), exponent(p1)
    win = t_seq.window(truncation)
    t_vals, r_vals = win.t_values, win.rho_values
    c0, c1 = couple.space0, couple.space1

    def scale(space):
        if math.isinf(space.pf):
            return space.weights
        return space.weights * space.masses ** (1.0 / space.pf)

    def cvx_p(p):
        return "inf" if math.isinf(float(p)) else float(p)

    w = cp.Variable((t_vals.size, couple.size))
    s0, s1 = scale(c0), scale(c1)
    leg0 = cp.hstack([cp.norm(cp.multiply(w[n], s0), cvx_p(c0.p)) for n in range(t_vals.size)])
    leg1 = cp.hstack([t_vals[n] * cp.norm(cp.multiply(w[n], s1), cvx_p(c1.p))
                      for n in range(t_vals.size)])
    objective = cp.maximum(cp.norm(leg0, cvx_p(p0)), cp.norm(leg1, cvx_p(p1)))
    problem = cp.Problem(cp.Minimize(objective), [r_vals @ w == x])
    try:
        problem.solve(solver=cp.CLARABEL)
    except cp.error.SolverError as exc:
        raise SolverError(f"direct means solver failed: {exc}") from exc
    if problem.status not in ("optimal", "optimal_inaccurate"):
        raise SolverError(f"direct means solver ended with status {problem.status}")
    return float(problem.value)
