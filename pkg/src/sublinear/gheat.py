"""G-normal expectations from the G-heat equation.

Solves  d_t u = G(d_xx u),  u(0, .) = f,  with
G(a) = (sigma_hi^2 a^+ - sigma_lo^2 a^-) / 2, by an explicit monotone
finite-difference scheme. ``u(t, 0)`` is the G-normal expectation of
f(sqrt(t) xi). A backward dynamic program on a variance-controlled binomial
lattice provides an independent cross-check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import GParams
from .functions import TestFunction

MIN_NODES = 101
# at most this many time levels are kept in a GridSolution (plus t=0 and t_final)
MAX_SNAPSHOTS = 257


class UnstableStepError(ValueError):
    """Time step violates dt <= 0.5 dx^2 / sigma_hi^2."""


class BlowUpError(RuntimeError):
    pass


class ResolutionCapError(RuntimeError):
    def __init__(self, message: str, estimates: dict[int, float]):
        super().__init__(message)
        self.estimates = estimates


def g_function(a, params: GParams):
    a = np.asarray(a, dtype=float)
    out = 0.5 * (params.sigma_hi**2 * np.maximum(a, 0.0) - params.sigma_lo**2 * np.maximum(-a, 0.0))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class GridSpec:
    half_width: float
    nx: int
    t_final: float
    dt: float | None = None

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / (self.nx - 1)

    def max_dt(self, params: GParams) -> float:
        return 0.5 * self.dx**2 / params.sigma_hi**2

    def n_steps(self, params: GParams) -> int:
        if self.t_final == 0:
            return 0
        if self.dt is None:
            return math.ceil(self.t_final / self.max_dt(params) - 1e-12)
        return max(1, round(self.t_final / self.dt))

    def step(self, params: GParams) -> float:
        n = self.n_steps(params)
        return self.t_final / n if n else 0.0

    def validate(self, params: GParams, center: float = 0.0) -> None:
        if self.nx < MIN_NODES or self.nx % 2 == 0:
            raise ValueError(f"nx must be odd and >= {MIN_NODES}, got {self.nx}")
        if self.t_final < 0:
            raise ValueError("t_final must be >= 0")
        need = 6.0 * params.sigma_hi * math.sqrt(self.t_final) + abs(center)
        if self.half_width < need - 1e-12:
            raise ValueError(f"half_width {self.half_width} < required {need}")
        if self.dt is not None and self.dt > self.max_dt(params) * (1 + 1e-12):
            raise UnstableStepError(
                f"unstable step: dt={self.dt} > 0.5*dx^2/sigma_hi^2={self.max_dt(params)}"
            )

    @classmethod
    def auto(cls, params: GParams, t_final: float, nx: int = MIN_NODES,
             center: float = 0.0) -> "GridSpec":
        """Smallest admissible domain (never narrower than [-1, 1])."""
        width = max(6.0 * params.sigma_hi * math.sqrt(t_final) + abs(center), 1.0)
        return cls(width, nx, t_final)


@dataclass(frozen=True)
class GridSolution:
    grid: GridSpec
    params: GParams
    x: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)  # (len(times), nx)

    def at(self, x: float = 0.0) -> float:
        """u(t_final, x) by linear interpolation."""
        return float(np.interp(x, self.x, self.values[-1]))

    def at_time(self, tau: float) -> np.ndarray:
        """Spatial profile at the stored time level nearest to ``tau``."""
        i = int(np.argmin(np.abs(self.times - tau)))
        return self.values[i]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "u"])
            for t, row in zip(self.times, self.values):
                for xi, ui in zip(self.x, row):
                    w.writerow([f"{t:.17e}", f"{xi:.17e}", f"{ui:.17e}"])


def solve_gheat(f: TestFunction, params: GParams, grid: GridSpec,
                n_snapshots: int = MAX_SNAPSHOTS) -> GridSolution:
    """Explicit scheme u <- u + dt * G(D2 u); D2 is zero at the two edge nodes."""
    grid.validate(params, center=f.center)
    m = (grid.nx - 1) // 2
    x = grid.half_width * (np.arange(-m, m + 1) / m)  # exactly antisymmetric, x[m] == 0
    u = np.array(f(x), dtype=float)
    n = grid.n_steps(params)
    dt = grid.step(params)
    inv_dx2 = 1.0 / grid.dx**2
    hi2, lo2 = 0.5 * params.sigma_hi**2 * dt, 0.5 * params.sigma_lo**2 * dt

    save_every = max(1, math.ceil(n / max(1, n_snapshots)))
    times, frames = [0.0], [u.copy()]
    d2 = np.empty(grid.nx - 2)
    for j in range(1, n + 1):
        np.subtract(u[2:] + u[:-2], 2.0 * u[1:-1], out=d2)
        d2 *= inv_dx2
        u[1:-1] += hi2 * np.maximum(d2, 0.0) - lo2 * np.maximum(-d2, 0.0)
        if j % save_every == 0 or j == n:
            if not np.all(np.isfinite(u)):
                raise BlowUpError(f"blow-up at step {j}")
            times.append(j * dt)
            frames.append(u.copy())
    return GridSolution(grid, params, x, np.array(times), np.vstack(frames))


def g_expect(f: TestFunction, params: GParams, t: float = 1.0, tol: float = 1e-4,
             nx0: int = MIN_NODES, max_nx: int = 3201) -> float:
    """u(t, 0) refined by doubling resolution until successive values differ by < tol."""
    if t <= 0:
        raise ValueError("t must be > 0")
    if f.is_constant:
        return float(f(np.zeros(1))[0])
    estimates: dict[int, float] = {}
    nx = nx0
    prev = None
    while nx <= max_nx:
        grid = GridSpec.auto(params, t, nx, center=f.center)
        val = solve_gheat(f, params, grid, n_snapshots=1).at(0.0)
        estimates[nx] = val
        if prev is not None and abs(val - prev) < tol:
            return val
        prev = val
        nx = 2 * nx - 1
    raise ResolutionCapError(
        f"resolution cap exceeded (nx <= {max_nx}) for {f.id}: {estimates}", estimates
    )


def _rational_ratio(beta: float, max_den: int = 16) -> Fraction | None:
    q = Fraction(beta).limit_denominator(max_den)
    return q if abs(float(q) - beta) <= 1e-12 * beta else None


def lattice_expect(f: TestFunction, params: GParams, t: float = 1.0, n_steps: int = 1024) -> float:
    """Backward recursion V(x) = max_sigma (V(x + sigma h) + V(x - sigma h)) / 2.

    h = sqrt(t / n_steps), sigma in {sigma_lo, sigma_hi}. When beta = b/a is
    rational with small denominator both moves land on the lattice
    (sigma_lo h / a) Z and the recursion is exact; otherwise successor values
    are linearly interpolated on a grid 8x finer than sigma_lo h.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    h = math.sqrt(t / n_steps)
    ratio = _rational_ratio(params.beta)
    if ratio is not None:
        a, b = ratio.denominator, ratio.numerator
        delta = params.sigma_lo * h / a
        half = n_steps * b
        v = np.asarray(f(delta * np.arange(-half, half + 1)), dtype=float)
        for k in range(n_steps):
            # nodes still needed after this step: |j| <= (n_steps - k - 1) * b
            lo_avg = 0.5 * (v[b - a:len(v) - b - a] + v[b + a:len(v) - b + a])
            hi_avg = 0.5 * (v[:-2 * b] + v[2 * b:])
            v = np.maximum(lo_avg, hi_avg)
        return float(v[0])

    m = 8
    delta = params.sigma_lo * h / m
    half_width = params.sigma_hi * h * n_steps
    nodes = int(math.ceil(half_width / delta))
    x = delta * np.arange(-nodes, nodes + 1)
    v = np.asarray(f(x), dtype=float)
    for _ in range(n_steps):
        best = None
        for s in (params.sigma_lo, params.sigma_hi):
            avg = 0.5 * (np.interp(x + s * h, x, v) + np.interp(x - s * h, x, v))
            best = avg if best is None else np.maximum(best, avg)
        v = best
    return float(np.interp(0.0, x, v))


@dataclass(frozen=True)
class MeanCertaintyReport:
    function: str
    e_plus: float
    e_minus: float
    gap: float
    in_h: bool
    eps_h: float


def is_mean_certain(f: TestFunction, params: GParams, eps_h: float = 1e-3, tol: float = 1e-4,
                    t: float = 1.0) -> MeanCertaintyReport:
    if eps_h < 4 * tol:
        raise ValueError(f"eps_h={eps_h} must be >= 4*tol={4 * tol}")
    e_plus = g_expect(f, params, t, tol)
    e_minus = g_expect(-f, params, t, tol)
    gap = e_plus + e_minus
    return MeanCertaintyReport(f.id, e_plus, e_minus, gap, abs(gap) <= eps_h, eps_h)
