import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sublinear.core import GParams
from sublinear.functions import parse_function
from sublinear.sampler import (
    SHAPES,
    PathBatch,
    ScenarioStrategy,
    moment_report,
    read_batch,
    realize_sigmas,
    sample_batch,
    shape_abs_moment,
    unit_draws,
    write_batch,
)

BAND = GParams(0.5, 1.0)
ALL_STRATEGIES = ["const_lo", "const_hi", "periodic:2", "periodic:5", "iid_mix:0.3",
                  "greedy:cos:1:+", "greedy:absclip:10:-", "greedy:cos:1:+:lookahead"]


def test_const_hi_rademacher():
    b = sample_batch(ScenarioStrategy("const_hi"), GParams(0.5, 1), 200, 5, seed=3)
    assert set(np.unique(b.increments)) == {-1.0, 1.0}


def test_periodic_trace():
    b = sample_batch(ScenarioStrategy.parse("periodic:2"), BAND, 7, 3, seed=1)
    assert np.all(b.sigma_trace == [0.5, 1, 0.5, 1, 0.5, 1, 0.5])


@pytest.mark.parametrize("sid", ALL_STRATEGIES)
def test_determinism_and_band(sid):
    s = ScenarioStrategy.parse(sid)
    a = sample_batch(s, BAND, 300, 4, seed=11)
    b = sample_batch(s, BAND, 300, 4, seed=11)
    assert np.array_equal(a.increments, b.increments)
    assert np.array_equal(a.sigma_trace, b.sigma_trace)
    assert np.all((a.sigma_trace >= 0.5) & (a.sigma_trace <= 1.0))
    assert np.all(np.isin(a.sigma_trace, [0.5, 1.0]))


def test_parse_and_ids():
    assert ScenarioStrategy.parse("periodic:3").id == "periodic:3"
    assert ScenarioStrategy.parse("iid_mix:0.25").id == "iid_mix:0.25"
    g = ScenarioStrategy.parse("greedy:*:-")
    assert g.unbound and g.bind("cos:1").id == "greedy:cos:1:-"
    assert ScenarioStrategy.parse("const_lo@gaussian").shape == "gaussian"
    assert ScenarioStrategy.parse("greedy:cos:1:+:lookahead").lookahead
    for bad in ("nope", "periodic:0", "iid_mix:2", "const_lo@cauchy"):
        with pytest.raises(ValueError):
            ScenarioStrategy.parse(bad)
    with pytest.raises(ValueError):
        sample_batch(g, BAND, 10, 1, seed=1)  # unbound
    with pytest.raises(ValueError):
        sample_batch(ScenarioStrategy("const_lo"), BAND, 0, 1, seed=1)


@pytest.mark.parametrize("sid", ["greedy:cos:1:+", "greedy:bump:1:-", "greedy:cos:1:+:lookahead"])
def test_adaptedness(sid):
    s = ScenarioStrategy.parse(sid)
    units = unit_draws("rademacher", 5, 400, 6)
    base = realize_sigmas(s, BAND, units)
    rng = np.random.default_rng(0)
    for cut in (1, 17, 150, 399):
        altered = units.copy()
        altered[:, cut:] = rng.choice([-1.0, 1.0], size=altered[:, cut:].shape)
        again = realize_sigmas(s, BAND, altered)
        assert np.array_equal(base[:, :cut + 1], again[:, :cut + 1])


def test_greedy_is_adversarial():
    # maximizing the mean of cos(W) calls for small volatility, minimizing for large
    f = parse_function("cos:1")
    n = 256
    up = sample_batch(ScenarioStrategy.parse("greedy:cos:1:+"), BAND, n, 400, seed=2)
    dn = sample_batch(ScenarioStrategy.parse("greedy:cos:1:-"), BAND, n, 400, seed=2)
    b = BAND.sigma_mid * math.sqrt(n)
    assert f(up.increments.sum(1) / b).mean() > f(dn.increments.sum(1) / b).mean()


@given(st.integers(0, 2**63), st.integers(0, 50), st.integers(1, 40))
@settings(max_examples=25)
def test_keyed_rng_is_schedule_free(seed, first, n_steps):
    for shape in SHAPES:
        whole = unit_draws(shape, seed, n_steps, 6, first)
        tail = unit_draws(shape, seed, n_steps, 3, first + 3)
        assert np.array_equal(whole[3:], tail)
        shorter = unit_draws(shape, seed, max(1, n_steps // 2), 6, first)
        assert np.array_equal(whole[:, :shorter.shape[1]], shorter)


@pytest.mark.parametrize("shape", SHAPES)
def test_unit_variance_shapes(shape):
    u = unit_draws(shape, 9, 2000, 20)
    n = u.size
    assert abs(u.mean()) < 4 / math.sqrt(n)
    assert abs(u.var() - 1) < 4 * math.sqrt(shape_abs_moment(shape, 4) / n)


@pytest.mark.parametrize("sigma", [0.5, 1.0])
def test_const_variance(sigma):
    n_paths = 4000
    b = sample_batch(ScenarioStrategy("const_lo", shape="gaussian"), GParams(sigma, 1.0), 3, n_paths, seed=4)
    var = b.increments.var(axis=0)
    assert np.all(np.abs(var - sigma**2) < 4 * sigma**2 / math.sqrt(n_paths))


def test_moment_report_rademacher_exact():
    b = sample_batch(ScenarioStrategy("const_hi"), GParams(1, 1), 50, 10, seed=1)
    rep = moment_report(b, 0.5)
    assert rep.sup_abs_moment == 1.0
    with pytest.raises(ValueError):
        moment_report(b, 1.0)


def test_moment_report_gaussian_third_moment():
    n_paths = 20000
    b = sample_batch(ScenarioStrategy("const_hi", shape="gaussian"), GParams(1, 1), 1, n_paths, seed=8)
    exact = 2 * math.sqrt(2 / math.pi)
    assert shape_abs_moment("gaussian", 3) == pytest.approx(exact)
    se = math.sqrt((shape_abs_moment("gaussian", 6) - exact**2) / n_paths)
    assert abs(moment_report(b, 0.999999).sup_abs_moment - exact) < 3 * se + 1e-4


@pytest.mark.parametrize("sid", ALL_STRATEGIES[:5])
def test_mean_gap_clt_bound(sid):
    n_paths = 5000
    b = sample_batch(ScenarioStrategy.parse(sid), BAND, 1, n_paths, seed=21)
    assert moment_report(b, 0.5).mean_gap <= 3 * BAND.sigma_hi / math.sqrt(n_paths)


@pytest.mark.parametrize("shape", SHAPES)
def test_moment_bound_by_shape(shape):
    b = sample_batch(ScenarioStrategy("iid_mix", shape=shape), BAND, 20, 2000, seed=5)
    bound = BAND.sigma_hi ** 2.5 * shape_abs_moment(shape, 2.5)
    rep = moment_report(b, 0.5)
    assert math.isfinite(rep.sup_abs_moment) and rep.sup_abs_moment <= 1.5 * bound


@pytest.mark.parametrize("sid", ["iid_mix:0.4@uniform", "greedy:cos:1:+"])
def test_csv_round_trip(tmp_path, sid):
    b = sample_batch(ScenarioStrategy.parse(sid), BAND, 13, 4, seed=2**40 + 1, first_path=7)
    path = tmp_path / "batch.csv"
    write_batch(b, path)
    r = read_batch(path)
    assert isinstance(r, PathBatch)
    assert np.array_equal(r.increments, b.increments)
    assert np.array_equal(r.sigma_trace, b.sigma_trace)
    assert (r.strategy, r.seed, r.params, r.first_path) == (b.strategy, b.seed, b.params, b.first_path)
    path.write_text("garbage\n")
    with pytest.raises(ValueError):
        read_batch(path)
