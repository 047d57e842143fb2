import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sublinear.functions import DEFAULT_CATALOG, LIP1_BATTERY, catalog, parse_function

ALL_IDS = sorted(set(DEFAULT_CATALOG + LIP1_BATTERY + ("const:2.5", "-cos:1", "poly:3:2")))
finite = st.floats(-1e3, 1e3, allow_nan=False)


@pytest.mark.parametrize("fid", ALL_IDS)
@given(xs=st.lists(finite, min_size=1, max_size=50))
def test_bounded(fid, xs):
    f = parse_function(fid)
    assert np.all(np.abs(f(np.array(xs))) <= f.bound + 1e-12)


@pytest.mark.parametrize("fid", ALL_IDS)
@given(x=finite, y=finite)
def test_lipschitz(fid, x, y):
    f = parse_function(fid)
    fx, fy = f(np.array([x, y]))
    assert abs(fx - fy) <= f.lip * abs(x - y) * (1 + 1e-9) + 1e-12


@pytest.mark.parametrize("fid", ALL_IDS)
def test_declared_constants_are_tight(fid):
    # the analytic bound and slope are attained up to grid resolution
    f = parse_function(fid)
    x = np.linspace(-50, 50, 2_000_001)
    y = f(x)
    assert np.max(np.abs(y)) == pytest.approx(f.bound, rel=1e-3, abs=1e-12)
    slope = np.max(np.abs(np.diff(y)) / np.diff(x))
    assert slope == pytest.approx(f.lip, rel=1e-3, abs=1e-12)


@pytest.mark.parametrize("fid", LIP1_BATTERY)
def test_lip1_battery(fid):
    assert parse_function(fid).lip == pytest.approx(1.0, rel=1e-15)


def test_convexity_claims():
    for f in catalog(ALL_IDS):
        for radius, sign in ((f.convex_radius, 1), (f.concave_radius, -1)):
            if radius == 0:
                continue
            r = min(radius, 40.0)
            x = np.linspace(f.center - r, f.center + r, 4001)
            d2 = f(x[2:]) + f(x[:-2]) - 2 * f(x[1:-1])
            assert np.all(sign * d2 >= -1e-12), f.id


def test_parse_and_ids():
    f = parse_function("absclip:10")
    assert f.id == "absclip:10" and f.bound == 10 and f.lip == 1
    g = parse_function("-absclip:10")
    assert g.id == "-absclip:10"
    assert g.concave_radius == 10 and g.convex_radius == 0
    assert float(g(np.array([-3.0]))[0]) == -3.0
    assert parse_function("cos").id == "cos"
    assert float(parse_function("cos")(np.zeros(1))[0]) == 1.0
    n = parse_function("sin:2/L")
    assert n.lip == 1.0 and n.bound == 0.5


@pytest.mark.parametrize("bad", ["nope:1", "cos:1:2", "ramp:a:1", "poly:0:1"])
def test_parse_errors(bad):
    with pytest.raises(ValueError):
        parse_function(bad)


def test_algebra():
    f, g = parse_function("cos:1"), parse_function("sin:1")
    h = f.scale(2.0) + g.scale(-3.0)
    x = np.linspace(-5, 5, 101)
    assert np.allclose(h(x), 2 * np.cos(x) - 3 * np.sin(x))
    assert h.bound == 5 and h.lip == 5
    assert (-(-f)).id == f.id
    c = parse_function("const:2.5")
    assert c.is_constant and np.all(c(x) == 2.5)
    assert math.isinf(c.convex_radius)
