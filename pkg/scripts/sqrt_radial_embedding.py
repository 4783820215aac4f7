"""Composition ratios ||u o f||_{B^{s'}} / ||u||_{B^s} for the square-root radial map.

Sweeps s at p = 2 with s' on the admissible boundary (s - 2 s') p = 2, or at a
fixed offset above it with --excess (explore mode).
"""
import argparse

from biholder.besov import admissible_smoothness, embedding_ratio_study, gen_bumps
from biholder.mapping import HolderParams, make_sqrt_radial
from biholder.space import build_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--resolutions", type=int, nargs="+", default=[41, 81, 161])
    ap.add_argument("--s", type=float, nargs="+", default=[1.2, 1.6, 2.0])
    ap.add_argument("--excess", type=float, default=0.0, help="add this to s' (explore mode)")
    ap.add_argument("--center-budget", type=int, default=4000)
    args = ap.parse_args()
    holder = HolderParams(1.0, 0.5, 2.0, 4.0)
    mode = "explore" if args.excess > 0 else "verify"
    print(f"{'res':>5} {'s':>5} {'s_prime':>8} {'sup_ratio':>10}")
    for res in args.resolutions:
        g = build_grid(2, 4.0, res)
        m = make_sqrt_radial(g)
        fam = gen_bumps(g, 20, (0.5, 2.0), seed=0)
        for s in args.s:
            sp = admissible_smoothness(2.0, 2.0, 1.0, 0.5, s, 2.0).s_prime_max + args.excess
            rep = embedding_ratio_study(m, s, sp, 2.0, fam, holder=holder, Q_Z=2.0, Q_W=2.0, mode=mode,
                                        center_budget=args.center_budget)
            print(f"{res:>5} {s:>5.2f} {sp:>8.3f} {rep.sup_ratio:>10.4f}")


if __name__ == "__main__":
    main()
