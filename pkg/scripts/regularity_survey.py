"""Regularity exponents of the built-in spaces next to their exact values."""
import math

from biholder.space import build_cantor, build_grid, estimate_regularity, snowflake

CASES = [
    ("cantor 1/3, depth 8", lambda: build_cantor(1 / 3, 8), math.log(2) / math.log(3)),
    ("cantor 1/4, depth 6", lambda: build_cantor(1 / 4, 6), 0.5),
    ("cantor 1/3 snowflaked 1/2", lambda: snowflake(build_cantor(1 / 3, 8), 0.5), 2 * math.log(2) / math.log(3)),
    ("2D grid, 41 per axis", lambda: build_grid(2, 1.0, 41), 2.0),
    ("1D grid snowflaked 1/2", lambda: snowflake(build_grid(1, 1.0, 2001), 0.5), 2.0),
]

if __name__ == "__main__":
    for name, build, exact in CASES:
        rep = estimate_regularity(build())
        print(f"{name:<28} Q_hat={rep.Q_hat:.4f}  exact={exact:.4f}  C_hat={rep.C_hat:.3f}")
