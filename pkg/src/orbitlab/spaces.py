"""Finite atomic measure spaces, weighted L_p norms and couples.

A weighted space ``L_p(U)`` on atoms with masses ``mu`` carries the norm
``||x U||_p``. Sequence spaces over an integer interval are the special case
of unit masses; ``offset`` records the integer index of the first atom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

INF = math.inf

Exponent = Union[Fraction, float]


class DimensionError(ValueError):
    """Element length does not match the atom count of its space."""


class DomainError(ValueError):
    """Invalid parameter (exponent, weight or mass)."""


def exponent(p) -> Exponent:
    """Normalize ``p`` to a ``Fraction`` (finite) or ``INF``.

    Accepts ints, floats, Fractions and strings such as ``"4/3"``, ``"inf"``.
    """
    if isinstance(p, str):
        s = p.strip().lower()
        if s in ("inf", "infinity", "+inf", "∞"):
            return INF
        p = Fraction(s)
    if isinstance(p, float) and math.isinf(p):
        if p < 0:
            raise DomainError(f"exponent must lie in [1, inf], got {p}")
        return INF
    if isinstance(p, float) and math.isnan(p):
        raise DomainError("exponent is NaN")
    value = Fraction(p)
    if value < 1:
        raise DomainError(f"exponent must lie in [1, inf], got {p}")
    return value


def dual_exponent(p) -> Exponent:
    """Conjugate exponent ``p' = (1 - 1/p)^-1``; 1 and inf swap."""
    p = exponent(p)
    if p == INF:
        return Fraction(1)
    if p == 1:
        return INF
    return p / (p - 1)


def inverse(p) -> Fraction:
    """``1/p`` as an exact Fraction, with ``1/inf = 0``."""
    p = exponent(p)
    return Fraction(0) if p == INF else 1 / p


def format_exponent(p) -> Union[str, float]:
    p = exponent(p)
    if p == INF:
        return "inf"
    if p.denominator == 1:
        return int(p)
    return f"{p.numerator}/{p.denominator}"


def _frozen(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.size == 0:
        raise DomainError(f"{name} must contain at least one atom")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        bad = int(np.flatnonzero(~(np.isfinite(arr) & (arr > 0)))[0])
        raise DomainError(f"{name}[{bad}] must be positive and finite, got {arr[bad]}")
    arr.setflags(write=False)
    return arr


def lp_norm(v: np.ndarray, p, masses: np.ndarray | None = None) -> float:
    """``(sum masses*|v|^p)^(1/p)`` or ``max|v|``, scaled against overflow."""
    v = np.abs(np.asarray(v, dtype=float))
    if v.size == 0:
        return 0.0
    top = float(v.max())
    if top == 0.0:
        return 0.0
    pf = float(p)
    if math.isinf(pf):
        return top
    w = (v / top) ** pf
    if masses is not None:
        w = w * masses
    return top * float(w.sum()) ** (1.0 / pf)


@dataclass(frozen=True)
class WeightedSpace:
    """``L_p(U)`` over finitely many atoms.

    ``norm(x) = (sum_m masses_m |x_m U_m|^p)^(1/p)``, or ``max_m |x_m U_m|``
    for ``p = inf``.
    """

    masses: np.ndarray
    p: Exponent
    weights: np.ndarray
    offset: int = 0

    def __post_init__(self):
        object.__setattr__(self, "masses", _frozen(self.masses, "masses"))
        object.__setattr__(self, "weights", _frozen(self.weights, "weights"))
        object.__setattr__(self, "p", exponent(self.p))
        if self.masses.shape != self.weights.shape:
            raise DimensionError(
                f"masses has {self.masses.size} atoms but weights has {self.weights.size}")
        object.__setattr__(self, "offset", int(self.offset))

    @classmethod
    def sequence(cls, p, weights, offset: int = 0) -> "WeightedSpace":
        """Weighted l_p over consecutive integers starting at ``offset``."""
        weights = np.asarray(weights, dtype=float)
        return cls(np.ones(weights.size), p, weights, offset)

    @property
    def size(self) -> int:
        return self.masses.size

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.size)

    @property
    def pf(self) -> float:
        return float(self.p)

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size != self.size:
            raise DimensionError(f"element has shape {x.shape}, space has {self.size} atoms")
        return x

    def norm(self, x) -> float:
        x = self.check(x)
        return lp_norm(x * self.weights, self.p, None if self.p == INF else self.masses)

    def __eq__(self, other):
        if not isinstance(other, WeightedSpace):
            return NotImplemented
        return (self.p == other.p and self.offset == other.offset
                and np.array_equal(self.masses, other.masses)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self):
        return hash((self.p, self.offset, self.masses.tobytes(), self.weights.tobytes()))


@dataclass(frozen=True, eq=False)
class Couple:
    """An ordered pair of weighted spaces over the same atoms."""

    space0: WeightedSpace
    space1: WeightedSpace
    _key: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.space0.size != self.space1.size:
            raise DimensionError("couple spaces have different atom counts")
        if not np.array_equal(self.space0.masses, self.space1.masses):
            raise DomainError("couple spaces must share the same masses")
        object.__setattr__(self, "_key", (self.space0, self.space1))

    @classmethod
    def lebesgue(cls, masses, p0, weights0, p1, weights1, offset: int = 0) -> "Couple":
        return cls(WeightedSpace(masses, p0, weights0, offset),
                   WeightedSpace(masses, p1, weights1, offset))

    @classmethod
    def sequence(cls, p0, p1, u, weights0=None) -> "Couple":
        """The couple ``{l_p0, l_p1(1/u)}`` used throughout the discretizations."""
        u = np.asarray(u, dtype=float)
        w0 = np.ones(u.size) if weights0 is None else weights0
        return cls(WeightedSpace.sequence(p0, w0), WeightedSpace.sequence(p1, 1.0 / u))

    @property
    def size(self) -> int:
        return self.space0.size

    @property
    def masses(self) -> np.ndarray:
        return self.space0.masses

    def swapped(self) -> "Couple":
        return Couple(self.space1, self.space0)

    def norms(self, x) -> tuple[float, float]:
        return self.space0.norm(x), self.space1.norm(x)

    def __eq__(self, other):
        return isinstance(other, Couple) and self._key == other._key

    def __hash__(self):
        return hash(self._key)


def norm(space: WeightedSpace, x) -> float:
    return space.norm(x)


def sum_and_intersection_norms(couple: Couple, x) -> tuple[float, float]:
    """Norms of ``x`` in ``X0 + X1`` (that is ``K(1, 1, x)``) and in ``X0 ∩ X1``."""
    from .kfunc import k_at

    x = couple.space0.check(x)
    return k_at(couple, x, 1.0, 1.0).value, max(couple.norms(x))
