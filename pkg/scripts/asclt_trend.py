"""Median distance of log-averages A_n(f) from the G-normal mean, per horizon
and strategy. Prints CSV; handy for eyeballing how slowly A_n settles.

    python3 scripts/asclt_trend.py --sigma-lo 1 --n-paths 50 --max-exp 6
"""

import argparse

from sublinear.config import parse_config
from sublinear.verify import run_asclt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sigma-lo", type=float, default=1.0)
    ap.add_argument("--sigma-hi", type=float, default=1.0)
    ap.add_argument("--function", default="cos:1")
    ap.add_argument("--n-paths", type=int, default=50)
    ap.add_argument("--max-exp", type=int, default=5)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    horizons = ", ".join(str(10**e) for e in range(2, args.max_exp + 1))
    cfg = parse_config(
        f"[params]\nsigma_lo = {args.sigma_lo}\nsigma_hi = {args.sigma_hi}\n"
        f"[sampling]\nn_paths = {args.n_paths}\n"
        f"[functions]\nbattery = [{args.function}]\n[asclt]\nhorizons = [{horizons}]\n"
    )
    rep = run_asclt(cfg, jobs=args.jobs)
    print("horizon,strategy,median_dev,frac_within")
    fracs = {(r.horizon, r.strategy): r.value for r in rep.select("frac_within")}
    for r in rep.select("median_dev"):
        print(f"{r.horizon},{r.strategy},{r.value:.6f},{fracs[(r.horizon, r.strategy)]:.3f}")
    for n in rep.notes:
        print(f"# {n}")


if __name__ == "__main__":
    main()
