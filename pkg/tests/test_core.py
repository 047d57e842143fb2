import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sublinear.core import (
    EmptyFamilyError,
    GParams,
    NonFiniteStatisticError,
    PairingError,
    check_axioms,
    event_prob,
    lower_expect,
    upper_expect,
)

small = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def family(rows=st.integers(1, 5), cols=st.integers(1, 30)):
    return st.tuples(rows, cols).flatmap(lambda s: arrays(float, s, elements=small))


def test_constant_preserving():
    assert upper_expect(np.full((3, 50), 3.5)).value == 3.5
    assert lower_expect(np.full((3, 50), 3.5)) == 3.5


def test_max_and_min_of_means():
    stats = {"a": [0.1, 0.3], "b": [-0.2, 0.0]}
    est = upper_expect(stats)
    assert est.value == pytest.approx(0.2)
    assert est.argmax.model == "a"
    assert lower_expect(stats) == pytest.approx(-0.1)
    assert all(m.stderr >= 0 for m in est.per_model)


def test_normal_mean_within_three_se():
    x = np.random.default_rng(42).standard_normal(10_000)
    est = upper_expect(x)
    assert abs(est.value) <= 3 * est.per_model[0].stderr


def test_errors():
    with pytest.raises(EmptyFamilyError, match="empty family"):
        upper_expect({})
    with pytest.raises(EmptyFamilyError, match="empty family"):
        upper_expect(np.empty((0, 4)))
    with pytest.raises(NonFiniteStatisticError, match="non-finite statistic"):
        upper_expect([[1.0, float("nan")]])
    with pytest.raises(ValueError):
        upper_expect({"a": [1, 2], "b": [1]})


@given(family())
def test_lower_is_dual_of_upper(x):
    assert lower_expect(x) == -upper_expect(-x).value
    assert lower_expect(x) <= upper_expect(x).value


@given(family(), st.data())
def test_enlarging_family(x, data):
    extra = data.draw(arrays(float, (1, x.shape[1]), elements=small))
    bigger = np.vstack([x, extra])
    assert upper_expect(bigger).value >= upper_expect(x).value
    assert lower_expect(bigger) <= lower_expect(x)


def test_event_prob_examples():
    est = event_prob(np.ones((2, 10)))
    assert (est.upper, est.lower) == (1.0, 1.0)
    a = np.array([1.0] * 9 + [0.0])
    b = np.array([1.0] * 4 + [0.0] * 6)
    est = event_prob({"A": a, "B": b})
    assert (est.upper, est.lower) == (0.9, 0.4)
    with pytest.raises(ValueError):
        event_prob([[0.0, 0.5]])


@given(st.tuples(st.integers(1, 5), st.integers(1, 40)).flatmap(
    lambda s: arrays(float, s, elements=st.sampled_from([0.0, 1.0]))))
def test_event_duality(ind):
    # V(A) + nu(A^c) = 1 exactly on shared indicators
    assert event_prob(ind).upper + event_prob(1.0 - ind).lower == 1.0
    assert event_prob(ind).lower <= event_prob(ind).upper


def test_axioms_examples():
    x = np.random.default_rng(0).normal(size=(3, 20))
    rep = check_axioms(x, x)
    sub = [r for r in rep.results if r.axiom == "sub_additivity"][0]
    assert sub.passed and sub.lhs == sub.rhs
    rep0 = check_axioms(x, x, lam=0.0)
    hom = [r for r in rep0.results if r.axiom == "positive_homogeneity"][0]
    assert hom.lhs == 0 and hom.passed


def test_axioms_random_paired():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(4, 1000))
    y = rng.standard_t(3, size=(4, 1000))
    rep = check_axioms(x, y, lam=1.7, c=-0.3)
    assert rep.passed
    assert len(rep.lines()) == 4


@given(family(), st.data(), st.floats(0, 100), small)
def test_axioms_property(x, data, lam, c):
    y = data.draw(arrays(float, x.shape, elements=small))
    assert check_axioms(x, y, lam=lam, c=c).passed


def test_axioms_exactness_beats_float():
    # float sums would mis-order these; the exact check does not
    x = np.array([[1e16, 1.0, -1e16]])
    y = np.array([[1.0, 1.0, 1.0]])
    rep = check_axioms(x, y)
    assert rep.passed
    sub = [r for r in rep.results if r.axiom == "sub_additivity"][0]
    assert sub.lhs == Fraction(4, 3)


def test_axioms_pairing():
    with pytest.raises(PairingError, match="paired evaluation required"):
        check_axioms(np.zeros((2, 3)), np.zeros((2, 4)))


def test_gparams():
    p = GParams(0.5, 1.0)
    assert p.beta == 2.0 and p.sigma_mid == 0.75 and not p.is_classical
    assert GParams(1, 1).is_classical
    q = GParams.from_beta(2.0)
    assert q.sigma_lo == pytest.approx(2 / 3) and q.sigma_hi == pytest.approx(4 / 3)
    assert q.beta == pytest.approx(2.0, rel=1e-15)
    n = p.normalized()
    assert n.sigma_mid == pytest.approx(1.0) and n.beta == pytest.approx(2.0)
    for bad in ((0, 1), (1.5, 1.0), (-1, 1), (1, math.inf)):
        with pytest.raises(ValueError):
            GParams(*bad)
    with pytest.raises(ValueError):
        GParams.from_beta(0.5)
