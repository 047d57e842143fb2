"""Experiment configuration: nested dataclasses and a strict flat text format.

    [params]
    sigma_lo = 0.5
    sigma_hi = 1.0
    [sampling]
    strategies = [const_lo, const_hi, periodic:2]

Sections are bracketed headers, values are numbers, bare or quoted strings,
or bracketed lists. Unknown keys, duplicates, type and range errors are all
collected and raised together as one ``ConfigError``.
"""

import dataclasses
import hashlib
import math
import typing
from dataclasses import dataclass, field

from .core import GParams
from .functions import DEFAULT_CATALOG, LIP1_BATTERY, parse_function
from .sampler import SHAPES, ScenarioStrategy


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("invalid config:\n  " + "\n  ".join(problems))
        self.problems = problems


def _opt(default, help: str):
    return field(default=default, metadata={"help": help})


@dataclass(frozen=True)
class ParamsSection:
    sigma_lo: float = _opt(0.5, "lower volatility")
    sigma_hi: float = _opt(1.0, "upper volatility")


DEFAULT_STRATEGIES = (
    "const_lo",
    "const_hi",
    "periodic:2",
    "iid_mix:0.5",
    "greedy:*:+",
    "greedy:*:-",
    "greedy:*:+:lookahead",
    "greedy:*:-:lookahead",
)


@dataclass(frozen=True)
class SamplingSection:
    shape: str = _opt("rademacher", f"unit-variance shape, one of {SHAPES}")
    strategies: tuple[str, ...] = _opt(DEFAULT_STRATEGIES, "strategy catalog; greedy:* binds to each function")
    n_paths: int = _opt(100, "paths per strategy")
    seed: int = _opt(1, "64-bit base seed")
    chunk: int = _opt(25, "paths per work unit (fixed, so results do not depend on worker count)")


@dataclass(frozen=True)
class FunctionsSection:
    battery: tuple[str, ...] = _opt(DEFAULT_CATALOG, "functions for asclt/slln/covariance/blocks")
    rate_battery: tuple[str, ...] = _opt(LIP1_BATTERY, "Lipschitz-1 battery for the rate check")
    eps_h: float = _opt(1e-3, "mean-certainty tolerance")
    g_tol: float = _opt(1e-4, "G-heat refinement tolerance")


@dataclass(frozen=True)
class AscltSection:
    horizons: tuple[int, ...] = _opt((1000, 10000, 100000, 1000000), "log-average horizons")
    delta: float = _opt(0.15, "deviation threshold at the top horizon")
    fraction: float = _opt(0.8, "required fraction of paths within delta")
    target_offset: float = _opt(0.0, "added to the target (negative control when nonzero)")


@dataclass(frozen=True)
class SllnSection:
    function: str = _opt("cos:1", "f in xi_k = f(W_k) - E f(W_k)")
    n_blocks: int = _opt(10, "number of 4-adic blocks (4^N - 1 steps)")
    n0: int = _opt(2, "first block index in the max")
    eps: float = _opt(0.1, "threshold on T_m / m")
    delta: float = _opt(0.05, "pass if the nu-estimate >= 1 - delta")
    drift: float = _opt(0.0, "added to every Z_l (negative control when positive)")
    eps_small: float = _opt(0.1, "hypothesis: |E T_n| / n <= eps_small")


@dataclass(frozen=True)
class RateSection:
    horizons: tuple[int, ...] = _opt((64, 128, 256, 512, 1024, 2048, 4096), "horizons n")
    classical_slope: float = _opt(-0.5, "expected slope when sigma_lo = sigma_hi")
    slope_tol: float = _opt(0.15, "tolerance on the classical slope")


@dataclass(frozen=True)
class CovarianceSection:
    function: str = _opt("cos:1", "f in xi_k")
    grid: tuple[int, ...] = _opt((1, 4, 16, 64, 256, 1024), "indices j <= k")


@dataclass(frozen=True)
class BlocksSection:
    function: str = _opt("cos:1", "f in xi_k")
    n_blocks: int = _opt(8, "blocks N <= 10")


@dataclass(frozen=True)
class InequalitiesSection:
    p: float = _opt(2.0, "Hoelder exponent p")
    q: float = _opt(2.0, "Hoelder exponent q (1/p + 1/q = 1)")
    x_grid: tuple[float, ...] = _opt((0.5, 1.0, 1.5, 2.0, 3.0), "Chebyshev thresholds")
    rosenthal_p: float = _opt(4.0, "Rosenthal moment order")
    rosenthal_n: tuple[int, ...] = _opt((64, 256, 1024), "Rosenthal horizons")
    horizon: int = _opt(64, "W_n used for Chebyshev and Hoelder")


@dataclass(frozen=True)
class TolerancesSection:
    alpha: float = _opt(0.5, "moment exponent alpha in (0, 1)")
    trend: float = _opt(1.5, "no growth trend: last <= trend * median")


@dataclass(frozen=True)
class ReferenceSection:
    mode: str = _opt("catalog_sup", "catalog_sup or pde_limit")


@dataclass(frozen=True)
class ExperimentConfig:
    params: ParamsSection = field(default_factory=ParamsSection)
    sampling: SamplingSection = field(default_factory=SamplingSection)
    functions: FunctionsSection = field(default_factory=FunctionsSection)
    asclt: AscltSection = field(default_factory=AscltSection)
    slln: SllnSection = field(default_factory=SllnSection)
    rate: RateSection = field(default_factory=RateSection)
    covariance: CovarianceSection = field(default_factory=CovarianceSection)
    blocks: BlocksSection = field(default_factory=BlocksSection)
    inequalities: InequalitiesSection = field(default_factory=InequalitiesSection)
    tolerances: TolerancesSection = field(default_factory=TolerancesSection)
    reference: ReferenceSection = field(default_factory=ReferenceSection)

    @property
    def g_params(self) -> GParams:
        return GParams(self.params.sigma_lo, self.params.sigma_hi)

    def strategies(self) -> list[ScenarioStrategy]:
        return [ScenarioStrategy.parse(s, shape=self.sampling.shape) for s in self.sampling.strategies]

    def replace(self, **sections) -> "ExperimentConfig":
        """``cfg.replace(slln={'drift': 0.5})`` returns a modified copy."""
        new = {k: dataclasses.replace(getattr(self, k), **v) for k, v in sections.items()}
        out = dataclasses.replace(self, **new)
        problems = _validate(out)
        if problems:
            raise ConfigError(problems)
        return out


SECTIONS = {f.name: f.default_factory for f in dataclasses.fields(ExperimentConfig)}


def _section_types(cls) -> dict[str, object]:
    return typing.get_type_hints(cls)


def _split_list(text: str) -> list[str]:
    inner = text.strip()[1:-1].strip()
    return [_unquote(p.strip()) for p in inner.split(",")] if inner else []


def _unquote(s: str) -> str:
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        return s[1:-1]
    return s


def _convert(raw: str, tp, where: str, problems: list[str]):
    raw = raw.strip()
    try:
        if tp is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        if tp is int:
            return int(raw)
        if tp is str:
            if raw.startswith("["):
                raise ValueError
            return _unquote(raw)
        origin = typing.get_origin(tp)
        if origin is tuple:
            if not (raw.startswith("[") and raw.endswith("]")):
                raise ValueError
            elem = typing.get_args(tp)[0]
            return tuple(elem(x) for x in _split_list(raw))
    except ValueError:
        pass
    name = getattr(tp, "__name__", str(tp))
    problems.append(f"{where}: expected {name}, got {raw!r}")
    return None


def _validate(cfg: ExperimentConfig) -> list[str]:
    p: list[str] = []
    pr = cfg.params
    if not 0 < pr.sigma_lo <= pr.sigma_hi:
        p.append(f"params: need 0 < sigma_lo <= sigma_hi, got {pr.sigma_lo}, {pr.sigma_hi}")
    s = cfg.sampling
    if s.shape not in SHAPES:
        p.append(f"sampling.shape: unknown shape {s.shape!r}")
    if not s.strategies:
        p.append("sampling.strategies: empty family")
    for sid in s.strategies:
        try:
            ScenarioStrategy.parse(sid)
        except ValueError as exc:
            p.append(f"sampling.strategies: {exc}")
    for name in ("n_paths", "chunk"):
        if getattr(s, name) < 1:
            p.append(f"sampling.{name}: must be >= 1")
    if not 0 <= s.seed < 2**64:
        p.append("sampling.seed: must be a 64-bit unsigned integer")
    fn = cfg.functions
    for fid in fn.battery + fn.rate_battery + (cfg.slln.function, cfg.covariance.function, cfg.blocks.function):
        try:
            parse_function(fid)
        except ValueError as exc:
            p.append(f"functions: {exc}")
    if fn.g_tol <= 0 or fn.eps_h <= 0:
        p.append("functions: tolerances must be positive")
    elif fn.eps_h < 4 * fn.g_tol:
        p.append("functions.eps_h: must be >= 4 * g_tol")
    a = cfg.asclt
    if not a.horizons or min(a.horizons) < 2 or list(a.horizons) != sorted(set(a.horizons)):
        p.append("asclt.horizons: need strictly increasing horizons >= 2")
    if a.delta <= 0 or not 0 < a.fraction <= 1:
        p.append("asclt: delta must be positive and fraction in (0, 1]")
    sl = cfg.slln
    if not 1 <= sl.n_blocks <= 12:
        p.append("slln.n_blocks: must lie in [1, 12]")
    if not 1 <= sl.n0 <= sl.n_blocks:
        p.append("slln.n0: must lie in [1, n_blocks]")
    if sl.eps <= 0 or not 0 < sl.delta < 1 or sl.eps_small <= 0:
        p.append("slln: eps, eps_small must be positive and delta in (0, 1)")
    r = cfg.rate
    if len(r.horizons) < 2 or min(r.horizons) < 1 or list(r.horizons) != sorted(set(r.horizons)):
        p.append("rate.horizons: need at least two strictly increasing horizons")
    if r.slope_tol <= 0:
        p.append("rate.slope_tol: must be positive")
    c = cfg.covariance
    if not c.grid or min(c.grid) < 1 or list(c.grid) != sorted(set(c.grid)):
        p.append("covariance.grid: need strictly increasing indices >= 1")
    if not 1 <= cfg.blocks.n_blocks <= 10:
        p.append("blocks.n_blocks: must lie in [1, 10]")
    iq = cfg.inequalities
    if iq.p <= 1 or iq.q <= 1 or abs(1 / iq.p + 1 / iq.q - 1) > 1e-12:
        p.append(f"inequalities: p={iq.p}, q={iq.q} are not conjugate")
    if not iq.x_grid or min(iq.x_grid) <= 0:
        p.append("inequalities.x_grid: thresholds must be positive")
    if iq.rosenthal_p < 2 or not iq.rosenthal_n or min(iq.rosenthal_n) < 1 or iq.horizon < 1:
        p.append("inequalities: rosenthal_p >= 2 and horizons >= 1 required")
    t = cfg.tolerances
    if not 0 < t.alpha < 1:
        p.append("tolerances.alpha: must lie in (0, 1)")
    if t.trend < 1:
        p.append("tolerances.trend: must be >= 1")
    if cfg.reference.mode not in ("catalog_sup", "pde_limit"):
        p.append(f"reference.mode: unknown mode {cfg.reference.mode!r}")
    return p


def _parse_assignments(text: str, problems: list[str]) -> dict[str, dict[str, str]]:
    values: dict[str, dict[str, str]] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]") and "=" not in line:
            section = line[1:-1].strip()
            if section not in SECTIONS:
                problems.append(f"line {lineno}: unknown section [{section}]")
            values.setdefault(section, {})
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected key = value, got {line!r}")
            continue
        key, raw = (s.strip() for s in line.split("=", 1))
        if section is None:
            problems.append(f"line {lineno}: key {key!r} outside any section")
            continue
        if key in values[section]:
            problems.append(f"line {lineno}: duplicate key {section}.{key}")
            continue
        values[section][key] = raw
    return values


def _build(values: dict[str, dict[str, str]], problems: list[str]) -> ExperimentConfig:
    sections = {}
    for name, cls in SECTIONS.items():
        types = _section_types(cls)
        given = values.get(name, {})
        kwargs = {}
        for key, raw in given.items():
            if key not in types:
                problems.append(f"unknown key {name}.{key}")
                continue
            v = _convert(raw, types[key], f"{name}.{key}", problems)
            if v is not None:
                kwargs[key] = v
        sections[name] = cls(**kwargs)
    return ExperimentConfig(**sections)


def parse_config(text: str, overrides: typing.Sequence[str] = ()) -> ExperimentConfig:
    """Parse config text, then apply ``section.key=value`` overrides."""
    problems: list[str] = []
    values = _parse_assignments(text, problems)
    for ov in overrides:
        if "=" not in ov:
            problems.append(f"override {ov!r}: expected section.key=value")
            continue
        lhs, raw = (s.strip() for s in ov.split("=", 1))
        if "." not in lhs:
            owners = [n for n, cls in SECTIONS.items() if lhs in _section_types(cls)]
            if len(owners) != 1:
                problems.append(f"override {ov!r}: key {lhs!r} is "
                                f"{'ambiguous' if owners else 'unknown'}; use section.key")
                continue
            lhs = f"{owners[0]}.{lhs}"
        sec, key = lhs.split(".", 1)
        if sec not in SECTIONS:
            problems.append(f"override {ov!r}: unknown section {sec!r}")
            continue
        values.setdefault(sec, {})[key] = raw
    cfg = _build({k: v for k, v in values.items() if k in SECTIONS}, problems)
    problems += _validate(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def _format_value(v) -> str:
    if isinstance(v, tuple):
        return "[" + ", ".join(_format_value(x) for x in v) + "]"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for name in SECTIONS:
        lines.append(f"[{name}]")
        sec = getattr(cfg, name)
        for f in dataclasses.fields(sec):
            lines.append(f"{f.name} = {_format_value(getattr(sec, f.name))}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()


def describe_defaults() -> str:
    """Human-readable list of every key with its default, for --help."""
    out = []
    for name, cls in SECTIONS.items():
        out.append(f"[{name}]")
        for f in dataclasses.fields(cls):
            out.append(f"  {f.name} = {_format_value(f.default)}    # {f.metadata.get('help', '')}")
    return "\n".join(out)
