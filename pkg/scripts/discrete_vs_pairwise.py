"""Ratio of the multiscale scale part to the pairwise Besov seminorm on 1D grids.

The band constant K should stay roughly fixed as the grid is refined.
"""
import argparse

import numpy as np

from biholder.besov import BesovParams, besov_seminorm, default_discretization, discrete_besov, gen_bumps
from biholder.space import build_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--resolutions", type=int, nargs="+", default=[101, 201, 401, 801])
    ap.add_argument("--s", type=float, default=0.5)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--n-bumps", type=int, default=20)
    args = ap.parse_args()
    bp = BesovParams(args.s, args.p)
    print(f"{'res':>5} {'scales':>6} {'min':>7} {'median':>7} {'max':>7} {'K':>7}")
    for res in args.resolutions:
        g = build_grid(1, 1.0, res)
        disc = default_discretization(g, 1.0)
        r = np.array([discrete_besov(u, bp, disc).scale_part / besov_seminorm(u, bp)
                      for u in gen_bumps(g, args.n_bumps, (0.1, 0.5), seed=0)])
        K = max(r.max(), 1 / r.min())
        print(f"{res:>5} {disc.n_scales:>6} {r.min():>7.3f} {np.median(r):>7.3f} {r.max():>7.3f} {K:>7.3f}")


if __name__ == "__main__":
    main()
