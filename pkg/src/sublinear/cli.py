"""Command-line entry point.

Exit codes: 0 all verdicts pass, 1 some verdict fails, 2 usage or config
error, 3 inconclusive (standard errors too large or hypotheses not met).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, describe_defaults, parse_config
from .core import GParams, check_axioms
from .functions import DEFAULT_CATALOG, parse_function
from .gheat import GridSpec, ResolutionCapError, g_expect, is_mean_certain, lattice_expect, solve_gheat
from .sampler import ScenarioStrategy, sample_batch, write_batch

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3
OUT_ENV = "SUBLINEAR_OUT"

log = logging.getLogger("sublinear")

_EXPERIMENT_NAMES = {"asclt": "asclt", "slln": "slln", "rate": "rate", "cov": "covariance",
                     "blocks": "blocks", "ineq": "inequalities"}


def _add_band(p, lo=1.0, hi=1.0):
    p.add_argument("--sigma-lo", type=float, default=lo)
    p.add_argument("--sigma-hi", type=float, default=hi)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sublinear", description="Sub-linear expectation toolkit.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (flat key = value with [sections])")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override, e.g. --set slln.drift=0.5 (applied after --config)")
    common.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or .)")
    common.add_argument("--seed", type=int, default=None, help="overrides sampling.seed")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("-v", "--verbose", action="count", default=0)

    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("expect", parents=[common], help="G-normal expectation via the G-heat equation")
    p.add_argument("--f", required=True, help="function id, e.g. cos or absclip:10")
    _add_band(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--grid-csv", action="store_true", help="also write the finest grid as CSV")

    p = sub.add_parser("lattice", parents=[common], help="adversarial lattice oracle")
    p.add_argument("--f", required=True)
    _add_band(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--n-steps", type=int, default=1024)

    p = sub.add_parser("membership", parents=[common], help="mean-certainty sweep over the catalog")
    _add_band(p)
    p.add_argument("--eps-h", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--functions", nargs="*", default=list(DEFAULT_CATALOG))

    p = sub.add_parser("sample", parents=[common], help="write a path batch as CSV")
    p.add_argument("--strategy", required=True, help="e.g. const_hi, periodic:2, greedy:cos:1:+")
    p.add_argument("--shape", default="rademacher")
    _add_band(p, 0.5, 1.0)
    p.add_argument("--n-steps", type=int, default=100)
    p.add_argument("--n-paths", type=int, default=10)

    p = sub.add_parser("axioms", parents=[common], help="exact axiom checks on random paired statistics")
    p.add_argument("--models", type=int, default=4)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--pairs", type=int, default=20)

    for name, help_text in (("asclt", "almost sure CLT log-average check"),
                            ("slln", "strong law check on block sums"),
                            ("rate", "convergence-rate check"),
                            ("cov", "covariance bound check"),
                            ("blocks", "block second-moment checks"),
                            ("ineq", "Chebyshev, Hoelder and Rosenthal checks")):
        sub.add_parser(name, parents=[common], help=help_text,
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       epilog="config keys and defaults:\n" + describe_defaults())
    return parser


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_config(args):
    text = ""
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError([f"cannot read config file: {exc}"]) from None
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"sampling.seed={args.seed}")
    return parse_config(text, overrides)


def _band(args) -> GParams:
    return GParams(args.sigma_lo, args.sigma_hi)


def _cmd_expect(args) -> int:
    f = parse_function(args.f)
    params = _band(args)
    value = g_expect(f, params, args.t, args.tol)
    print(f"{value:.6g}")
    if args.grid_csv:
        grid = GridSpec.auto(params, args.t, nx=801, center=f.center)
        path = _out_dir(args) / "gheat_grid.csv"
        solve_gheat(f, params, grid, n_snapshots=64).to_csv(path)
        log.info("wrote %s", path)
    return EXIT_OK


def _cmd_lattice(args) -> int:
    print(f"{lattice_expect(parse_function(args.f), _band(args), args.t, args.n_steps):.6g}")
    return EXIT_OK


def _cmd_membership(args) -> int:
    params = _band(args)
    for fid in args.functions:
        rep = is_mean_certain(parse_function(fid), params, args.eps_h, args.tol)
        print(f"{fid}: e_plus={rep.e_plus:.6g} e_minus={rep.e_minus:.6g} gap={rep.gap:.6g} "
              f"in_H={'yes' if rep.in_h else 'no'}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    strategy = ScenarioStrategy.parse(args.strategy, shape=args.shape)
    seed = 1 if args.seed is None else args.seed
    batch = sample_batch(strategy, _band(args), args.n_steps, args.n_paths, seed)
    path = _out_dir(args) / f"batch_{strategy.kind}_{seed}.csv"
    write_batch(batch, path)
    print(path)
    return EXIT_OK


def _cmd_axioms(args) -> int:
    seed = 7 if args.seed is None else args.seed
    rng = np.random.default_rng(seed)
    ok = True
    for i in range(args.pairs):
        x = rng.normal(size=(args.models, args.paths)) + rng.normal(size=(args.models, 1))
        y = rng.uniform(-1, 1, size=(args.models, args.paths)) * rng.uniform(0, 3, size=(args.models, 1))
        lam = float(rng.uniform(0, 5))
        c = float(rng.normal())
        rep = check_axioms(x, y, lam=lam, c=c)
        ok &= rep.passed
        if args.verbose or not rep.passed:
            print(f"pair {i}:")
            for line in rep.lines():
                print("  " + line)
    print(f"axioms: {'pass' if ok else 'fail'} ({args.pairs} pairs, {args.models} models x {args.paths} paths)")
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_experiment(args) -> int:
    from .verify.experiments import EXPERIMENTS
    from .verify.report import export_csv, persist

    cfg = _load_config(args)
    report = EXPERIMENTS[args.command](cfg, jobs=max(1, args.jobs))
    out = _out_dir(args)
    name = _EXPERIMENT_NAMES[args.command]
    persist(report, out / f"{name}.report")
    export_csv(report, out / f"{name}.csv")
    print(report.summary())
    log.info("wrote %s and %s", out / f"{name}.report", out / f"{name}.csv")
    return {"pass": EXIT_OK, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}[report.status]


_COMMANDS = {
    "expect": _cmd_expect,
    "lattice": _cmd_lattice,
    "membership": _cmd_membership,
    "sample": _cmd_sample,
    "axioms": _cmd_axioms,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.command in _EXPERIMENT_NAMES:
            return _cmd_experiment(args)
        if args.config or args.set:
            _load_config(args)  # validate even where unused
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResolutionCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
