import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import binomial_expect, gauss_hermite, normal_expect
from sublinear.core import GParams
from sublinear.functions import DEFAULT_CATALOG, TestFunction, catalog, constant, parse_function
from sublinear.gheat import (
    GridSpec,
    ResolutionCapError,
    UnstableStepError,
    g_expect,
    g_function,
    is_mean_certain,
    lattice_expect,
    solve_gheat,
)

TOL = 1e-4
SQRT_2_PI = math.sqrt(2 / math.pi)
KINKS = {"ramp:1:1": (-1, 1), "absclip:10": (-10, 0, 10), "poly:2:3": (-3, 3)}


def test_g_function_examples():
    assert g_function(0.0, GParams(0.5, 1)) == 0.0
    assert g_function(2.0, GParams(1, 1)) == 1.0
    assert g_function(-2.0, GParams(0.5, 1)) == -0.25


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0, 100))
def test_g_function_monotone_and_homogeneous(a, b, lam):
    p = GParams(0.5, 1.3)
    lo, hi = sorted((a, b))
    assert g_function(lo, p) <= g_function(hi, p)
    assert g_function(lam * a, p) == pytest.approx(lam * g_function(a, p), rel=1e-12, abs=1e-300)


def test_constant_stays_constant():
    sol = solve_gheat(constant(1.0), GParams(0.5, 1), GridSpec.auto(GParams(0.5, 1), 1.0))
    assert np.all(sol.values == 1.0)


def test_odd_symmetry_classical():
    f = parse_function("ramp:1:100")
    p = GParams(1, 1)
    sol = solve_gheat(f, p, GridSpec.auto(p, 1.0, nx=201))
    mid = sol.values.shape[1] // 2
    assert np.all(sol.values[:, mid] == 0.0)


def test_heat_closed_form():
    p = GParams(1, 1)
    sol = solve_gheat(parse_function("cos:1"), p, GridSpec.auto(p, 1.0, nx=201))
    assert sol.at(0.0) == pytest.approx(math.exp(-0.5), abs=5e-3)


def test_grid_validation():
    p = GParams(0.5, 1)
    with pytest.raises(UnstableStepError, match="unstable step"):
        GridSpec(6.0, 101, 1.0, dt=0.1).validate(p)
    with pytest.raises(ValueError):
        GridSpec(6.0, 100, 1.0).validate(p)
    with pytest.raises(ValueError):
        GridSpec(6.0, 51, 1.0).validate(p)
    with pytest.raises(ValueError):
        GridSpec(3.0, 101, 1.0).validate(p)
    g = GridSpec(6.0, 101, 1.0)
    assert g.step(p) <= g.max_dt(p)


def _pair():
    f = parse_function("bump:1")
    h = parse_function("cos:1").scale(0.5)
    g = TestFunction("max(bump, cos/2)", 1.0, 0.5, lambda x: np.maximum(f(x), h(x)))
    return f, g


def test_comparison_principle_and_range():
    f, g = _pair()
    p = GParams(0.5, 1.2)
    grid = GridSpec.auto(p, 1.0, nx=301)
    uf, ug = solve_gheat(f, p, grid), solve_gheat(g, p, grid)
    assert np.all(uf.values <= ug.values)
    x = uf.x
    assert np.all(uf.values >= f(x).min()) and np.all(uf.values <= f(x).max())
    assert np.all(np.isfinite(uf.values))


def test_csv_export(tmp_path):
    p = GParams(1, 1)
    sol = solve_gheat(parse_function("cos:1"), p, GridSpec.auto(p, 0.1), n_snapshots=4)
    path = tmp_path / "u.csv"
    sol.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "x", "u"]
    assert len(rows) - 1 == sol.values.size
    assert float(rows[-1][2]) == sol.values[-1, -1]


def test_g_expect_examples():
    p = GParams(0.5, 1)
    assert g_expect(constant(3.0), p) == 3.0
    f = parse_function("absclip:10")
    assert g_expect(f, p) == pytest.approx(SQRT_2_PI, abs=1e-2)
    assert g_expect(-f, p) == pytest.approx(-0.5 * SQRT_2_PI, abs=1e-2)
    assert g_expect(parse_function("cos:1"), GParams(1, 1)) == pytest.approx(math.exp(-0.5), abs=5e-3)
    with pytest.raises(ValueError):
        g_expect(f, p, t=0)


def test_resolution_cap():
    with pytest.raises(ResolutionCapError, match="resolution cap exceeded") as exc:
        g_expect(parse_function("cos:3"), GParams(0.5, 1), tol=1e-12, max_nx=201)
    assert set(exc.value.estimates) == {101, 201}


@pytest.mark.parametrize("fid", DEFAULT_CATALOG)
def test_classical_reduction_matches_quadrature(fid):
    f = parse_function(fid)
    got = g_expect(f, GParams(1, 1), tol=TOL)
    assert got == pytest.approx(normal_expect(f, 1.0, KINKS.get(fid, ())), abs=2 * TOL)


def test_convex_and_concave_reduction():
    p = GParams(0.5, 1)
    f = parse_function("absclip:10")
    assert f.convex_radius >= 6 * p.sigma_hi
    assert g_expect(f, p, tol=TOL) == pytest.approx(normal_expect(f, 1.0, (0,)), abs=2 * TOL)
    assert g_expect(-f, p, tol=TOL) == pytest.approx(-normal_expect(f, 0.5, (0,)), abs=2 * TOL)
    # Gauss-Hermite agrees at the looser oracle tolerance
    assert g_expect(f, p) == pytest.approx(gauss_hermite(f, 1.0), abs=1e-2)


@pytest.mark.parametrize("pair", [("cos:1", "sin:1"), ("absclip:10", "-bump:1"), ("ramp:1:1", "poly:2:3")])
def test_subadditivity(pair):
    p = GParams(0.5, 1)
    f, g = (parse_function(i) for i in pair)
    assert g_expect(f + g, p, tol=TOL) <= g_expect(f, p, tol=TOL) + g_expect(g, p, tol=TOL) + 2 * TOL


def test_lattice_examples():
    assert lattice_expect(constant(2.0), GParams(0.5, 1), n_steps=17) == 2.0
    assert lattice_expect(parse_function("poly:2:10"), GParams(1, 1), n_steps=256) == pytest.approx(1.0, abs=2e-2)
    f = parse_function("absclip:10")
    p = GParams(0.5, 1)
    assert lattice_expect(f, p, n_steps=1024) == pytest.approx(g_expect(f, p), abs=2e-2)


def test_lattice_classical_is_binomial():
    f = parse_function("cos:1")
    assert lattice_expect(f, GParams(1, 1), n_steps=64) == pytest.approx(binomial_expect(f, 64), abs=1e-13)


def test_lattice_monotone_in_f():
    f, g = _pair()
    for p in (GParams(0.5, 1), GParams(0.7, 1.3)):  # rational and irrational ratio
        assert lattice_expect(f, p, n_steps=64) <= lattice_expect(g, p, n_steps=64)


def test_lattice_irrational_ratio():
    p = GParams(1.0, math.sqrt(2))
    f = parse_function("absclip:10")
    assert lattice_expect(f, p, n_steps=256) == pytest.approx(g_expect(f, p), abs=2e-2)


@pytest.mark.parametrize("beta", [1.0, 1.5, 2.0])
def test_oracle_agreement(beta):
    p = GParams.from_beta(beta)
    for f in catalog():
        assert abs(g_expect(f, p) - lattice_expect(f, p, n_steps=1024)) <= 3e-2


def test_mean_certainty():
    rep = is_mean_certain(constant(5.0), GParams(0.5, 1))
    assert rep.gap == 0 and rep.in_h
    for f in catalog():
        assert is_mean_certain(f, GParams(1, 1)).in_h
    rep = is_mean_certain(parse_function("absclip:10"), GParams(0.5, 1))
    assert rep.gap == pytest.approx(0.5 * SQRT_2_PI, abs=1e-2) and not rep.in_h
    assert rep.gap >= -2 * TOL
    with pytest.raises(ValueError):
        is_mean_certain(constant(1.0), GParams(1, 1), eps_h=1e-4, tol=1e-4)


def test_h_closed_under_combination():
    p = GParams(1, 1)
    f1, f2 = parse_function("cos:1"), parse_function("bump:1")
    g1, g2 = is_mean_certain(f1, p).gap, is_mean_certain(f2, p).gap
    for a, b in ((2.0, -1.0), (-0.5, 3.0)):
        gap = is_mean_certain(f1.scale(a) + f2.scale(b), p).gap
        assert abs(gap) <= abs(a) * abs(g1) + abs(b) * abs(g2) + 4 * TOL
