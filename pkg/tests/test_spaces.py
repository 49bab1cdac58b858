import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitlab.spaces import (INF, Couple, DimensionError, DomainError, WeightedSpace, dual_exponent,
                             exponent, format_exponent, norm, sum_and_intersection_norms)


def test_norm_examples():
    assert norm(WeightedSpace([1, 1], 2, [1, 2]), [3, 4]) == pytest.approx(math.sqrt(73), rel=1e-12)
    assert norm(WeightedSpace([1, 1], INF, [1, 2]), [3, 4]) == 8
    assert norm(WeightedSpace([0.5, 2, 3], 4, [1, 2, 3]), [0, 0, 0]) == 0


def test_norm_masses_enter_linearly():
    sp = WeightedSpace([2.0, 3.0], 1, [1.0, 1.0])
    assert sp.norm([1.0, -1.0]) == pytest.approx(5.0)


def test_dual_exponent():
    assert dual_exponent(1) == INF
    assert dual_exponent(2) == 2
    assert dual_exponent(4) == Fraction(4, 3)
    assert dual_exponent(INF) == 1
    for p in (Fraction(3, 2), Fraction(7, 3), 5):
        assert dual_exponent(dual_exponent(p)) == p


def test_exponent_parsing():
    assert exponent("inf") == INF
    assert exponent("4/3") == Fraction(4, 3)
    assert format_exponent(Fraction(4, 3)) == "4/3"
    assert format_exponent(INF) == "inf"
    with pytest.raises(DomainError):
        exponent(0.5)


def test_sum_and_intersection_examples():
    c = Couple.lebesgue([1], 1, [2], 1, [3])
    assert sum_and_intersection_norms(c, [5]) == (pytest.approx(10), pytest.approx(15))
    assert sum_and_intersection_norms(c, [0]) == (0, 0)
    sp = WeightedSpace([1, 2], 2, [1, 3])
    s, i = sum_and_intersection_norms(Couple(sp, sp), [1, -1])
    assert s == pytest.approx(sp.norm([1, -1])) and i == pytest.approx(sp.norm([1, -1]))


def test_validation():
    with pytest.raises(DomainError, match=r"weights\[1\]"):
        WeightedSpace([1, 1], 2, [1, 0])
    with pytest.raises(DomainError):
        WeightedSpace([1, -1], 2, [1, 1])
    with pytest.raises(DimensionError):
        WeightedSpace([1, 1], 2, [1, 1]).norm([1, 2, 3])
    with pytest.raises(DimensionError):
        Couple(WeightedSpace([1], 1, [1]), WeightedSpace([1, 1], 1, [1, 1]))


def test_sequence_couple_offset():
    c = Couple.sequence(1, INF, [1.0, 2.0, 4.0])
    assert np.allclose(c.space1.weights, [1, 0.5, 0.25])
    assert np.array_equal(WeightedSpace.sequence(2, [1, 1, 1], offset=-1).indices, [-1, 0, 1])


vals = st.lists(st.floats(0.1, 10), min_size=1, max_size=16)


@settings(max_examples=60, deadline=None)
@given(vals, st.sampled_from([1, 1.5, 2, 4, INF]), st.floats(-5, 5))
def test_homogeneous(x, p, lam):
    sp = WeightedSpace(np.ones(len(x)), p, np.linspace(0.5, 2, len(x)))
    assert sp.norm(lam * np.array(x)) == pytest.approx(abs(lam) * sp.norm(x), rel=1e-12, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(vals, st.sampled_from([1, 2, 3, INF]), st.data())
def test_lattice_monotone(x, p, data):
    x = np.array(x)
    shrink = np.array(data.draw(st.lists(st.floats(0, 1), min_size=x.size, max_size=x.size)))
    sp = WeightedSpace(np.ones(x.size), p, np.ones(x.size))
    assert sp.norm(shrink * x) <= sp.norm(x) * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(vals)
def test_large_p_approaches_sup(x):
    x = np.array(x)
    w = np.ones(x.size)
    big = WeightedSpace(w, 10 ** 6, w).norm(x)
    sup = WeightedSpace(w, INF, w).norm(x)
    assert abs(big - sup) <= 0.02 * sup
