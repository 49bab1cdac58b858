from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitlab.kfunc import k_profile
from orbitlab.phifn import (ClassificationError, InterpFunction, InvariantError, balanced_sequence,
                            classify, concave_majorant, equivalence_band, evaluate)
from orbitlab.spaces import INF, Couple, DomainError


def test_eval_examples():
    assert evaluate(InterpFunction.power(Fraction(1, 2)), 4, 9) == 6
    phi = concave_majorant([[0.5, 1.0], [2.0, 3.0], [8.0, 4.0]])
    assert evaluate(phi, 1, 1) == pytest.approx(float(phi.rho(1.0)))


def test_eval_k_derived_matches_profile():
    c = Couple.lebesgue([1, 2, 1], 2, [1, 4, 0.5], INF, [2, 1, 3])
    x = [1.0, -0.5, 2.0]
    phi = InterpFunction.k_derived(c, x)
    for t, v in k_profile(c, x, np.geomspace(1e-3, 1e3, 13)):
        assert evaluate(phi, 1.0, t) == pytest.approx(v, rel=1e-8)


def test_homogeneity_is_structural():
    phi = concave_majorant([[1, 1], [2, 1.5], [4, 2]])
    for lam in (0.1, 3.0, 17.0):
        assert evaluate(phi, 2 * lam, 5 * lam) == pytest.approx(lam * evaluate(phi, 2, 5), rel=1e-12)


def test_classify_powers():
    c = classify(InterpFunction.power(Fraction(1, 2)))
    assert (c.alpha, c.beta, c.in_Phi0, c.nondegenerate) == (0, 0, True, (True, True))
    c0 = classify(InterpFunction.power(0))
    assert (c0.alpha, c0.beta, c0.phi0) == (1, 0, None)
    c1 = classify(InterpFunction.power(1))
    assert (c1.alpha, c1.beta) == (0, 1)


def test_classify_min():
    c = classify(InterpFunction.from_callable(lambda t: min(1.0, t), "min"))
    assert c.in_Phi0 and c.nondegenerate == (False, False) and c.both_bounded


def test_classify_linear_part():
    phi = InterpFunction.from_callable(lambda t: 1.0 + t ** 0.5, "1+sqrt")
    c = classify(phi)
    assert c.alpha == pytest.approx(1.0, rel=1e-3)
    assert c.beta == 0 and not c.in_Phi0
    assert c.phi0 is not None and float(c.phi0.rho(4.0)) == pytest.approx(2.0, rel=1e-3)


def test_classify_rejects_bad_domain():
    with pytest.raises(DomainError):
        classify(InterpFunction.power(Fraction(1, 2)), (2.0, 4.0))


def test_classify_error_carries_estimates():
    err = ClassificationError("x", (1.0, 2.0))
    assert err.estimates == (1.0, 2.0)


@pytest.mark.parametrize("theta,base", [(Fraction(1, 2), 4.0), (Fraction(1, 4), 16.0), (Fraction(3, 4), 16.0)])
def test_balanced_powers(theta, base):
    seq = balanced_sequence(InterpFunction.power(theta), 2.0, (2.0 ** -48, 2.0 ** 48)).window(10)
    assert seq.indices.min() == -10 and seq.indices.max() == 10
    assert np.allclose(seq.t_values, base ** seq.indices.astype(float), rtol=1e-8, atol=0)
    assert seq.side == "two_sided"


def test_balanced_degenerate():
    both = balanced_sequence(InterpFunction.from_callable(lambda t: min(1.0, t), "min"), 2.0)
    assert both.side == "empty" and len(both) == 1
    one = balanced_sequence(InterpFunction.from_callable(lambda t: min(1.0, t ** 0.5), "min-sqrt"), 2.0)
    assert one.side == "left_only"
    assert np.allclose(one.t_values, 4.0 ** one.indices.astype(float), rtol=1e-8)


def test_balanced_rejects_non_quasi_concave():
    with pytest.raises(InvariantError):
        InterpFunction.from_callable(lambda t: t * t, "square")
    with pytest.raises(DomainError):
        balanced_sequence(InterpFunction.power(Fraction(1, 2)), 1.0)


def test_majorant_examples():
    phi = concave_majorant([[1, 1], [2, 3], [3, 2]])
    assert float(phi.rho(3.0)) == pytest.approx(3.0)
    lin = concave_majorant([[1, 1], [2, 2], [4, 4]])
    assert np.allclose(lin.rho(np.array([1.0, 1.5, 3.0, 4.0])), [1.0, 1.5, 3.0, 4.0])
    pts = np.array([[1, 1], [2, 1.5], [4, 2]])
    assert np.allclose(concave_majorant(pts).rho(pts[:, 0]), pts[:, 1])
    with pytest.raises(DomainError):
        concave_majorant([[1, 1], [2, -1]])


samples = st.lists(st.tuples(st.floats(0.01, 100), st.floats(0.01, 100)), min_size=2, max_size=12,
                   unique_by=lambda p: round(p[0], 6))


def _points(raw):
    pts = np.array(sorted(raw))
    return pts[np.r_[True, np.diff(pts[:, 0]) > 1e-6]]


@settings(max_examples=60, deadline=None)
@given(samples)
def test_majorant_idempotent_and_quasi_concave(raw):
    pts = _points(raw)
    if len(pts) < 2:
        return
    phi = concave_majorant(pts)
    assert np.all(phi.rho(pts[:, 0]) >= pts[:, 1] * (1 - 1e-12))
    kt, kv = phi.knots
    again = concave_majorant(np.column_stack([kt, kv])) if kt.size >= 2 else phi
    grid = np.geomspace(1e-3, 1e3, 200)
    assert np.allclose(again.rho(grid), phi.rho(grid), rtol=1e-12)
    phi.check_quasi_concave((1e-3, 1e3))


@settings(max_examples=30, deadline=None)
@given(samples, st.sampled_from([1.5, 2.0, 4.0]))
def test_balanced_inequalities(raw, q):
    pts = _points(raw)
    if len(pts) < 2:
        return
    seq = balanced_sequence(concave_majorant(pts), q, (1e-4, 1e4))
    assert np.all(np.diff(seq.t_values) > 0)
    if len(seq) > 1:
        r_rho, r_tr = seq.ratios()
        assert np.all(np.minimum(r_rho, r_tr) >= q * (1 - 1e-6))
        assert np.all(np.minimum(r_rho, r_tr) <= q * (1 + 1e-6))
        assert np.all(seq.t_values[1:] / seq.t_values[:-1] >= q * (1 - 1e-9))


def test_equivalence_band_stable():
    phi = InterpFunction.power(Fraction(1, 2))
    b20 = equivalence_band(phi, 2, INF, truncation=20)
    b40 = equivalence_band(phi, 2, INF, truncation=40)
    assert b40.constant <= 1.1 * b20.constant
    assert b20.terms == 41 and b40.terms == 81
