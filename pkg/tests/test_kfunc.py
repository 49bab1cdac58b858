import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitlab.kfunc import KFunctional, OracleScaleError, k_at, k_oracle, k_profile
from orbitlab.spaces import INF, Couple

MENU = [1, 1.5, 2, 4, INF]


def test_single_atom():
    c = Couple.lebesgue([1], 1, [2], 1, [3])
    r = k_at(c, [5], 1, 1)
    assert r.value == pytest.approx(10)
    assert r.method == "closed_form"
    assert k_oracle(c, [5], 1, 1) == pytest.approx(10, abs=1e-6)


def test_l1_pointwise_min():
    c = Couple.lebesgue([1, 1], 1, [1, 4], 1, [3, 2])
    assert k_at(c, [1, 1], 1, 1).value == pytest.approx(3)
    assert k_oracle(c, [1, 1], 1, 1) == pytest.approx(3, abs=1e-6)


def test_l1_linf_against_oracle():
    c = Couple.lebesgue([1, 1], 1, [1, 1], INF, [1, 1])
    assert k_at(c, [2, 1], 1, 1).value == pytest.approx(k_oracle(c, [2, 1], 1, 1), abs=1e-6)


def test_l2_regression_fixture():
    # value fixed by the grid oracle; the solver must reproduce it
    c = Couple.lebesgue([1, 1], 2, [1, 1], 2, [2, 1])
    oracle = k_oracle(c, [1, 1], 1, 1)
    assert oracle == pytest.approx(1.4142135623730951, abs=1e-6)
    assert k_at(c, [1, 1], 1, 1).value == pytest.approx(oracle, abs=1e-8)


def test_decomposition_witness():
    c = Couple.lebesgue([1, 2, 0.5], 1.5, [1, 3, 0.2], 4, [2, 0.5, 1])
    x = np.array([1.0, -0.3, 2.0])
    r = k_at(c, x, 0.7, 1.9)
    assert np.allclose(r.x0 + r.x1, x, atol=1e-10)
    assert 0.7 * c.space0.norm(r.x0) + 1.9 * c.space1.norm(r.x1) <= r.value * (1 + 1e-8)


def test_profile_zero_and_equal():
    c = Couple.lebesgue([1, 1], 2, [1, 2], 1, [1, 1])
    assert all(v == 0 for _, v in k_profile(c, [0, 0], [0.5, 1, 2]))
    sp = Couple.lebesgue([1, 1], 2, [1, 2], 2, [1, 2])
    x = [1.0, 3.0]
    n = sp.space0.norm(x)
    for t, v in k_profile(sp, x, [0.25, 1, 4]):
        assert v == pytest.approx(min(1, t) * n)


def test_profile_matches_oracle():
    c = Couple.lebesgue([1, 2], 2, [1, 3], INF, [2, 0.5])
    x = [1.0, -1.5]
    for t, v in k_profile(c, x, np.geomspace(0.05, 20, 9)):
        assert v == pytest.approx(k_oracle(c, x, 1, t), abs=1e-6)


def test_profile_rejects_bad_grid():
    c = Couple.lebesgue([1], 1, [1], 2, [1])
    with pytest.raises(ValueError):
        k_profile(c, [1], [2, 1])


def test_oracle_scale_guard():
    c = Couple.lebesgue(np.ones(5), 1, np.ones(5), 2, np.ones(5))
    with pytest.raises(OracleScaleError):
        k_oracle(c, np.ones(5), 1, 1)


def test_free_sign_oracle_agrees():
    c = Couple.lebesgue([1, 1], 2, [1, 3], INF, [2, 1])
    x = [1.0, -0.5]
    assert k_oracle(c, x, 1, 1.3, free_sign=True) == pytest.approx(k_oracle(c, x, 1, 1.3), abs=1e-6)


def test_rho_matches_exact_profile():
    rng = np.random.default_rng(11)
    for p0, p1 in [(2, 2), (1, 2), (INF, 2), (4, 1.5), (2, INF)]:
        c = Couple.lebesgue(2 ** rng.uniform(-2, 2, 6), p0, 2 ** rng.uniform(-6, 6, 6),
                            p1, 2 ** rng.uniform(-6, 6, 6))
        kf = KFunctional(c, rng.normal(size=6))
        t = np.geomspace(1e-4, 1e4, 101)
        exact = kf(np.ones_like(t), t)
        assert np.allclose(kf.rho(t), exact, rtol=1e-8)


couples = st.builds(
    lambda m, e, seed: (m, e, seed),
    st.integers(1, 3), st.tuples(st.sampled_from(MENU), st.sampled_from(MENU)), st.integers(0, 10 ** 6))


def _make(m, e, seed):
    rng = np.random.default_rng(seed)
    c = Couple.lebesgue(2 ** rng.uniform(-3, 3, m), e[0], 2 ** rng.uniform(-4, 4, m),
                        e[1], 2 ** rng.uniform(-4, 4, m))
    return c, rng.normal(size=m)


@settings(max_examples=40, deadline=None)
@given(couples, st.sampled_from([0.5, 2, 10]))
def test_homogeneity(spec, lam):
    c, x = _make(*spec)
    base = k_at(c, x, 0.8, 1.7).value
    assert k_at(c, x, lam * 0.8, lam * 1.7).value == pytest.approx(lam * base, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(couples)
def test_bounds_monotone_concave(spec):
    c, x = _make(*spec)
    n0, n1 = c.norms(x)
    t = np.geomspace(1e-3, 1e3, 41)
    k = np.array([v for _, v in k_profile(c, x, t)])
    assert np.all(k <= np.minimum(n0, t * n1) * (1 + 1e-9) + 1e-300)
    assert np.all(np.diff(k) >= -1e-9 * k[1:])
    # concavity in t: value at the arithmetic midpoint dominates the chord
    am = 0.5 * (t[:-1] + t[1:])
    k_am = np.array([v for _, v in k_profile(c, x, am)])
    assert np.all(k_am >= 0.5 * (k[:-1] + k[1:]) - 1e-7 * (1 + k_am))


@settings(max_examples=25, deadline=None)
@given(couples, st.floats(-2, 2), st.floats(-2, 2))
def test_oracle_agreement(spec, ls, lt):
    c, x = _make(*spec)
    s, t = 2.0 ** ls, 2.0 ** lt
    o = k_oracle(c, x, s, t)
    assert abs(k_at(c, x, s, t).value - o) <= 1e-5 * (1 + o)
