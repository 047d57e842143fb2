"""Tabulate G-normal expectations of the catalog over a range of band ratios,
side by side with the lattice oracle.

    python3 scripts/gheat_table.py --betas 1 1.5 2 3 --n-steps 1024
"""

import argparse

from sublinear.core import GParams
from sublinear.functions import catalog
from sublinear.gheat import g_expect, lattice_expect


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--betas", type=float, nargs="+", default=[1.0, 1.5, 2.0])
    ap.add_argument("--n-steps", type=int, default=1024)
    ap.add_argument("--tol", type=float, default=1e-4)
    args = ap.parse_args()

    print("beta,function,pde,lattice,diff")
    for beta in args.betas:
        p = GParams(1.0 / beta, 1.0)
        for f in catalog():
            u = g_expect(f, p, tol=args.tol)
            v = lattice_expect(f, p, n_steps=args.n_steps)
            print(f"{beta:g},{f.id},{u:.8f},{v:.8f},{u - v:.2e}")


if __name__ == "__main__":
    main()
