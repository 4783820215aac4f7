"""Diameter of f(B((n,0), 1)) for the radial stretch x -> |x| x, n = 1..N.

Prints one row per window and the nested uniform-boundedness verdict.
"""
import argparse

from biholder.mapping import check_uniform_boundedness, make_radial_stretch, nested_ub_verdict
from biholder.space import build_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=10)
    ap.add_argument("--resolution", type=int, default=61)
    args = ap.parse_args()
    reps = []
    print(f"{'n':>3} {'b':>9} {'2n+1':>6}")
    for n in range(1, args.max_n + 1):
        g = build_grid(2, 1.5, args.resolution, offset=(float(n), 0.0))
        rep = check_uniform_boundedness(make_radial_stretch(g), 1.0, centers=[g.nearest((n, 0.0))])
        reps.append(rep)
        print(f"{n:>3} {rep.b:>9.3f} {2 * n + 1:>6}")
    print("nested verdict:", nested_ub_verdict(reps))


if __name__ == "__main__":
    main()
