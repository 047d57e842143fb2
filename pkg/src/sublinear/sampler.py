"""Scenario paths with adapted variance control.

Each increment is ``sigma_i * e_i`` where ``e_i`` is a unit-variance shape
draw and ``sigma_i`` in {sigma_lo, sigma_hi} is picked by a scenario
strategy from the past of the path only. Draws come from a Philox stream
keyed by (seed, path), so draw number k of a path is a fixed function of
(seed, path, k) no matter how paths are scheduled.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from numpy.random import Philox
from scipy.special import gamma, ndtri

from .core import GParams
from .functions import TestFunction, parse_function

SHAPES = ("rademacher", "gaussian", "uniform")
KINDS = ("const_lo", "const_hi", "periodic", "iid_mix", "greedy")

# greedy strategies re-decide every max(1, i // GREEDY_RESOLUTION) steps
GREEDY_RESOLUTION = 1024

_LANE_SHAPE = 0
_LANE_MIX = 1
_MASK64 = (1 << 64) - 1


def shape_abs_moment(shape: str, p: float) -> float:
    """E|e|^p for the unit-variance shape e."""
    if shape == "rademacher":
        return 1.0
    if shape == "gaussian":
        return 2 ** (p / 2) * gamma((p + 1) / 2) / math.sqrt(math.pi)
    if shape == "uniform":
        return math.sqrt(3.0) ** p / (p + 1)
    raise ValueError(f"unknown shape {shape!r}")


@dataclass(frozen=True)
class ScenarioStrategy:
    """Rule choosing each step's volatility inside [sigma_lo, sigma_hi].

    ``greedy`` picks sigma_hi when the one-step probe
    (f(x + sigma h) + f(x - sigma h)) / 2 of ``sign * f`` is larger under
    sigma_hi; with ``lookahead`` the probe uses the G-heat value function for
    the remaining horizon instead of f itself. ``target='*'`` is a
    placeholder bound later to whatever function is being evaluated.
    """

    kind: str
    period: int = 2
    prob: float = 0.5
    target: str | None = None
    sign: int = 1
    lookahead: bool = False
    shape: str = "rademacher"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}; known: {KINDS}")
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}; known: {SHAPES}")
        if self.kind == "periodic" and self.period < 1:
            raise ValueError("period must be >= 1")
        if self.kind == "iid_mix" and not 0 <= self.prob <= 1:
            raise ValueError("iid_mix probability must lie in [0, 1]")
        if self.kind == "greedy":
            if not self.target:
                raise ValueError("greedy strategy needs a target function")
            if self.sign not in (1, -1):
                raise ValueError("greedy sign must be +1 or -1")

    @property
    def id(self) -> str:
        if self.kind == "periodic":
            return f"periodic:{self.period}"
        if self.kind == "iid_mix":
            return f"iid_mix:{self.prob!r}"
        if self.kind == "greedy":
            s = f"greedy:{self.target}:{'+' if self.sign > 0 else '-'}"
            return s + ":lookahead" if self.lookahead else s
        return self.kind

    @property
    def unbound(self) -> bool:
        return self.kind == "greedy" and self.target == "*"

    def bind(self, function_id: str) -> "ScenarioStrategy":
        return replace(self, target=function_id) if self.unbound else self

    @classmethod
    def parse(cls, text: str, shape: str = "rademacher") -> "ScenarioStrategy":
        """``const_hi``, ``periodic:2``, ``iid_mix:0.5``, ``greedy:cos:1:+[:lookahead]``.

        A ``@shape`` suffix overrides ``shape``.
        """
        text = text.strip()
        if "@" in text:
            text, shape = text.split("@", 1)
        parts = text.split(":")
        kind = parts[0]
        try:
            if kind in ("const_lo", "const_hi") and len(parts) == 1:
                return cls(kind, shape=shape)
            if kind == "periodic" and len(parts) == 2:
                return cls(kind, period=int(parts[1]), shape=shape)
            if kind == "iid_mix" and len(parts) == 2:
                return cls(kind, prob=float(parts[1]), shape=shape)
            if kind == "greedy" and len(parts) >= 3:
                lookahead = parts[-1] == "lookahead"
                if lookahead:
                    parts = parts[:-1]
                sign_txt = parts[-1]
                if sign_txt not in ("+", "-", "+1", "-1"):
                    raise ValueError(f"bad sign {sign_txt!r}")
                target = ":".join(parts[1:-1])
                return cls(kind, target=target, sign=1 if sign_txt.startswith("+") else -1,
                           lookahead=lookahead, shape=shape)
        except ValueError as exc:
            raise ValueError(f"bad strategy {text!r}: {exc}") from None
        raise ValueError(f"unknown strategy {text!r}")


@dataclass(frozen=True, eq=False)
class PathBatch:
    increments: np.ndarray  # (n_paths, n_steps)
    sigma_trace: np.ndarray
    strategy: ScenarioStrategy
    seed: int
    params: GParams
    first_path: int = 0

    @property
    def n_paths(self) -> int:
        return self.increments.shape[0]

    @property
    def n_steps(self) -> int:
        return self.increments.shape[1]


def _stream(seed: int, path: int, lane: int) -> Philox:
    return Philox(key=(seed & _MASK64) | (path << 64), counter=lane << 192)


def _uniform_open(raw: np.ndarray) -> np.ndarray:
    # 53-bit midpoint grid, never 0 or 1
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def unit_draws(shape: str, seed: int, n_steps: int, n_paths: int, first_path: int = 0) -> np.ndarray:
    """Unit-variance draws; entry (p, k) depends only on (seed, first_path + p, k)."""
    out = np.empty((n_paths, n_steps))
    for p in range(n_paths):
        raw = _stream(seed, first_path + p, _LANE_SHAPE).random_raw(n_steps)
        if shape == "rademacher":
            out[p] = np.where(raw >> np.uint64(63), 1.0, -1.0)
        elif shape == "gaussian":
            out[p] = ndtri(_uniform_open(raw))
        elif shape == "uniform":
            out[p] = math.sqrt(3.0) * (2.0 * _uniform_open(raw) - 1.0)
        else:
            raise ValueError(f"unknown shape {shape!r}")
    return out


def _mix_uniforms(seed: int, n_steps: int, n_paths: int, first_path: int) -> np.ndarray:
    return np.vstack([
        _uniform_open(_stream(seed, first_path + p, _LANE_MIX).random_raw(n_steps))
        for p in range(n_paths)
    ])


@functools.lru_cache(maxsize=64)
def _value_function(f: TestFunction, params: GParams):
    # imported lazily: gheat is only needed by lookahead strategies
    from .gheat import GridSpec, solve_gheat

    norm = params.normalized()
    grid = GridSpec.auto(norm, 1.0, nx=401, center=f.center)
    return solve_gheat(f, norm, grid, n_snapshots=512)


def _greedy_epochs(n_steps: int, lookahead: bool) -> list[int]:
    epochs, e = [], 0
    while e < n_steps:
        epochs.append(e)
        step = max(1, (e + 1) // GREEDY_RESOLUTION)
        if lookahead:
            step = min(step, max(1, (n_steps - e) // GREEDY_RESOLUTION))
        e += step
    epochs.append(n_steps)
    return epochs


def realize_sigmas(strategy: ScenarioStrategy, params: GParams, units: np.ndarray,
                   mix_u: np.ndarray | None = None, function: TestFunction | None = None) -> np.ndarray:
    """Per-step volatility chosen by ``strategy`` given unit draws (paths x steps).

    The volatility at step k depends on ``units[:, :k]`` only.
    """
    n_paths, n_steps = units.shape
    lo, hi = params.sigma_lo, params.sigma_hi
    kind = strategy.kind
    if kind == "const_lo":
        return np.full(units.shape, lo)
    if kind == "const_hi":
        return np.full(units.shape, hi)
    if kind == "periodic":
        phase = np.arange(n_steps) % strategy.period
        row = np.where(phase < strategy.period / 2, lo, hi)
        return np.broadcast_to(row, units.shape).copy()
    if kind == "iid_mix":
        if mix_u is None:
            raise ValueError("iid_mix needs mixing uniforms")
        return np.where(mix_u < strategy.prob, hi, lo)

    # greedy
    if strategy.unbound:
        raise ValueError("greedy strategy with target '*' must be bound to a function first")
    f = function if function is not None and function.id == strategy.target else parse_function(strategy.target)
    sign = float(strategy.sign)
    sigma = np.empty(units.shape)
    s = np.zeros(n_paths)
    epochs = _greedy_epochs(n_steps, strategy.lookahead)
    if strategy.lookahead:
        vf = _value_function(f if sign > 0 else -f, params)
        b_n = params.sigma_mid * math.sqrt(n_steps)
    for e, e_next in zip(epochs[:-1], epochs[1:]):
        i = e + 1  # 1-based index of the step being decided
        if strategy.lookahead:
            profile = vf.at_time((n_steps - i) / n_steps)

            def probe(sig):
                up = np.interp((s + sig) / b_n, vf.x, profile)
                dn = np.interp((s - sig) / b_n, vf.x, profile)
                return 0.5 * (up + dn)

            gain = probe(hi) - probe(lo)
        else:
            b_i = params.sigma_mid * math.sqrt(i)

            def probe(sig):
                return 0.5 * (f((s + sig) / b_i) + f((s - sig) / b_i))

            gain = sign * (probe(hi) - probe(lo))
        chosen = np.where(gain > 0, hi, lo)
        sigma[:, e:e_next] = chosen[:, None]
        s = s + chosen * units[:, e:e_next].sum(axis=1)
    return sigma


def sample_batch(strategy: ScenarioStrategy, params: GParams, n_steps: int, n_paths: int,
                 seed: int, first_path: int = 0, function: TestFunction | None = None) -> PathBatch:
    if n_steps < 1 or n_paths < 1:
        raise ValueError("n_steps and n_paths must be >= 1")
    units = unit_draws(strategy.shape, seed, n_steps, n_paths, first_path)
    mix_u = _mix_uniforms(seed, n_steps, n_paths, first_path) if strategy.kind == "iid_mix" else None
    sigma = realize_sigmas(strategy, params, units, mix_u, function)
    return PathBatch(sigma * units, sigma, strategy, seed, params, first_path)


@dataclass(frozen=True)
class MomentReport:
    alpha: float
    sup_abs_moment: float
    mean_gap: float


def moment_report(batches: PathBatch | Sequence[PathBatch], alpha: float) -> MomentReport:
    """Largest per-step empirical (2+alpha)-moment and largest |per-step mean|."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if isinstance(batches, PathBatch):
        batches = [batches]
    sup_m, gap = 0.0, 0.0
    for b in batches:
        mom = np.mean(np.abs(b.increments) ** (2 + alpha), axis=0)
        sup_m = max(sup_m, float(mom.max()))
        gap = max(gap, float(np.abs(b.increments.mean(axis=0)).max()))
    return MomentReport(alpha, sup_m, gap)


_BATCH_MAGIC = "# sublinear-batch 1"


def write_batch(batch: PathBatch, path) -> None:
    """CSV layout: magic line, header row, then row-major increments and sigmas."""
    with open(path, "w") as fh:
        fh.write(_BATCH_MAGIC + "\n")
        fh.write("n_paths,n_steps,seed,strategy,shape,sigma_lo,sigma_hi,first_path\n")
        p = batch.params
        fh.write(
            f"{batch.n_paths},{batch.n_steps},{batch.seed},{batch.strategy.id},"
            f"{batch.strategy.shape},{p.sigma_lo!r},{p.sigma_hi!r},{batch.first_path}\n"
        )
        for name, mat in (("increments", batch.increments), ("sigma", batch.sigma_trace)):
            fh.write(f"[{name}]\n")
            for row in mat:
                fh.write(",".join(f"{v:.17e}" for v in row) + "\n")


def read_batch(path) -> PathBatch:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _BATCH_MAGIC:
        raise ValueError(f"{path}: not a batch file (expected {_BATCH_MAGIC!r})")
    fields = dict(zip(lines[1].split(","), lines[2].split(",")))
    n_paths, n_steps = int(fields["n_paths"]), int(fields["n_steps"])
    strategy = ScenarioStrategy.parse(fields["strategy"], shape=fields["shape"])
    params = GParams(float(fields["sigma_lo"]), float(fields["sigma_hi"]))

    def block(start):
        rows = lines[start:start + n_paths]
        return np.array([[float(v) for v in r.split(",")] for r in rows]).reshape(n_paths, n_steps)

    i_inc = lines.index("[increments]") + 1
    i_sig = lines.index("[sigma]") + 1
    return PathBatch(block(i_inc), block(i_sig), strategy, int(fields["seed"]), params,
                     int(fields["first_path"]))
