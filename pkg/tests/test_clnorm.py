from fractions import Fraction

import numpy as np
import pytest

from orbitlab.clnorm import cl_norm, cl_oracle, cl_seq_norm
from orbitlab.phifn import InterpFunction, evaluate
from orbitlab.kfunc import OracleScaleError
from orbitlab.spaces import INF, Couple, DomainError

HALF = InterpFunction.power(Fraction(1, 2))


def test_left_power_is_first_norm():
    c = Couple.lebesgue([1, 2], 2, [1, 3], 1, [5, 1])
    x = np.array([1.0, -2.0])
    r = cl_norm(InterpFunction.power(0), c, x)
    assert r.value == pytest.approx(c.space0.norm(x), rel=1e-12)


def test_equal_spaces_diagonal():
    c = Couple.lebesgue([1, 1], 1, [1, 2], 1, [1, 2])
    x = np.array([3.0, -1.0])
    r = cl_norm(HALF, c, x)
    assert r.value == pytest.approx(5.0, rel=1e-6)
    assert np.allclose(r.witness0, np.abs(x), rtol=1e-4)
    assert np.allclose(r.witness1, np.abs(x), rtol=1e-4)
    assert r.residual <= 1e-9 * np.abs(x).max()


def test_asymmetric_matches_oracle():
    c = Couple.lebesgue([1, 1], 1, [1, 3], 2, [2, 0.5])
    x = np.array([1.0, -2.0])
    r = cl_norm(HALF, c, x)
    assert r.value == pytest.approx(cl_oracle(HALF, c, x), rel=1e-4)


@pytest.mark.parametrize("p0,p1", [(1, INF), (INF, 2), (INF, INF)])
def test_sup_legs_match_oracle(p0, p1):
    c = Couple.lebesgue([1, 2], p0, [1, 4], p1, [3, 0.5])
    x = np.array([2.0, 1.0])
    phi = InterpFunction.power(Fraction(1, 4))
    assert cl_norm(phi, c, x).value == pytest.approx(cl_oracle(phi, c, x), rel=1e-4)


def test_oracle_closed_cases_and_guard():
    c = Couple.lebesgue([1, 1], 1, [1, 2], 1, [1, 2])
    assert cl_oracle(HALF, c, [3.0, -1.0]) == pytest.approx(5.0, rel=1e-6)
    assert cl_oracle(HALF, c, [0.0, 0.0]) == 0.0
    big = Couple.lebesgue(np.ones(4), 1, np.ones(4), 2, np.ones(4))
    with pytest.raises(OracleScaleError):
        cl_oracle(HALF, big, np.ones(4))


def test_seq_norm_cases():
    r = cl_seq_norm(HALF, 1, 1, [1.0, 4.0], [0.0, 0.0])
    assert r.value == 0.0
    one = cl_seq_norm(HALF, INF, INF, [4.0], [3.0])
    # single atom on l_inf, l_inf(1/u): a = b/u, phi(a, b) = 3 with ||.|| = max(a, b/u)
    assert one.value == pytest.approx(3.0 / evaluate(HALF, 1.0, 4.0), rel=1e-6)
    u, s = np.array([1.0, 4.0, 16.0]), np.array([1.0, 2.0, 3.0])
    direct = cl_norm(HALF, Couple.sequence(INF, INF, u), s).value
    assert cl_seq_norm(HALF, INF, INF, u, s).value == pytest.approx(direct, rel=1e-12)
    with pytest.raises(DomainError):
        cl_seq_norm(HALF, 1, 1, [4.0, 1.0], [1.0, 1.0])
