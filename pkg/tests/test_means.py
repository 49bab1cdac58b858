from fractions import Fraction

import numpy as np
import pytest

from orbitlab.clnorm import cl_norm
from orbitlab.kfunc import KFunctional, OracleScaleError
from orbitlab.means import means_norm, means_norm_direct
from orbitlab.phifn import ClassificationError, InterpFunction, balanced_sequence, evaluate
from orbitlab.spaces import INF, Couple

HALF = InterpFunction.power(Fraction(1, 2))
SEQ = balanced_sequence(HALF, 2.0)


def _couple(p0=1, p1=2):
    return Couple.lebesgue([1, 2], p0, [1, 3], p1, [2, 0.5])


def test_zero():
    c = _couple()
    assert means_norm(HALF, c, 2, 2, [0.0, 0.0]).value == 0.0
    assert means_norm_direct(HALF, c, 2, 2, np.zeros(2), SEQ, 2) == 0.0


def test_intersection_case():
    c = _couple()
    x = np.array([1.0, -2.0])
    r = means_norm(InterpFunction.from_callable(lambda t: min(1.0, t), "min"), c, 1, 1, x)
    assert r.degenerate_case == "intersection"
    assert r.value == pytest.approx(max(c.norms(x)), rel=1e-12)


def test_sum_space_case():
    c = _couple()
    x = np.array([1.0, -2.0])
    r = means_norm(InterpFunction.from_callable(lambda t: 1.0 + t, "sum"), c, 1, 1, x)
    assert r.degenerate_case == "sum_space"
    assert r.value == pytest.approx(KFunctional(c, x)(1.0, 1.0), rel=1e-12)


def test_one_sided_linear_part_rejected():
    with pytest.raises(ClassificationError):
        means_norm(InterpFunction.from_callable(lambda t: 1.0 + t ** 0.5, "x"), _couple(), 1, 1, [1.0, 1.0])


def test_marcinkiewicz_case():
    c = _couple(1, INF)
    x = np.array([1.0, -2.0])
    r = means_norm(HALF, c, INF, INF, x)
    kf = KFunctional(c, x)
    grid = np.geomspace(1e-8, 1e8, 2001)
    sup = float(np.max(kf(1.0, grid) / evaluate(HALF, 1.0, grid)))
    assert 0.25 <= r.value / sup <= 4


def test_direct_single_term_exact():
    c = _couple()
    x = np.array([1.0, -2.0])
    t0 = float(SEQ.window(0).t_values[0])
    y = x / float(HALF.rho(t0))
    want = max(c.space0.norm(y), t0 * c.space1.norm(y))
    assert means_norm_direct(HALF, c, 2, 2, x, SEQ, 0) == pytest.approx(want, rel=1e-6)


def test_direct_against_lemma2_and_cl():
    c = _couple(2, 2)
    x = np.array([1.0, -2.0])
    direct = means_norm_direct(HALF, c, 2, 2, x, SEQ, 4)
    lemma2 = means_norm(HALF, c, 2, 2, x).value
    cl = cl_norm(HALF, c, x).value
    assert 0.1 <= direct / lemma2 <= 10
    assert 0.1 <= direct / cl <= 10


def test_direct_scale_guard():
    big = Couple.lebesgue(np.ones(4), 1, np.ones(4), 2, np.ones(4))
    with pytest.raises(OracleScaleError):
        means_norm_direct(HALF, big, 1, 1, np.ones(4), SEQ, 2)
    with pytest.raises(OracleScaleError):
        means_norm_direct(HALF, _couple(), 1, 1, np.ones(2), SEQ, 7)
