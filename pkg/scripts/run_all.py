"""Run every experiment on one config and write reports plus CSV tables.

    python3 scripts/run_all.py --config my.cfg --out results --jobs 4
"""

import argparse
import sys
import time
from pathlib import Path

from sublinear.config import parse_config
from sublinear.verify import EXPERIMENTS
from sublinear.verify.report import export_csv, persist

NAMES = {"asclt": "asclt", "slln": "slln", "rate": "rate", "cov": "covariance",
         "blocks": "blocks", "ineq": "inequalities"}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=None)
    ap.add_argument("--set", action="append", default=[])
    ap.add_argument("--out", default="results")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--only", nargs="*", default=sorted(EXPERIMENTS))
    args = ap.parse_args()

    cfg = parse_config(Path(args.config).read_text() if args.config else "", args.set)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    worst = 0
    for key in args.only:
        t0 = time.perf_counter()
        rep = EXPERIMENTS[key](cfg, jobs=args.jobs)
        persist(rep, out / f"{NAMES[key]}.report")
        export_csv(rep, out / f"{NAMES[key]}.csv")
        print(rep.summary())
        print(f"  ({time.perf_counter() - t0:.1f}s)")
        worst = max(worst, {"pass": 0, "inconclusive": 3, "fail": 1}[rep.status])
    return worst


if __name__ == "__main__":
    sys.exit(main())
