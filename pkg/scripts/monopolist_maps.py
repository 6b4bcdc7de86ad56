#!/usr/bin/env python3
"""Gradient map of the quadratic screening problem.

Solves the problem on [0,1]^2 and summarizes the product (gradient) map: the
share of excluded consumers at the zero product, the mass concentrated near
the diagonal segment, and the spread of customized products.
"""

import argparse
from pathlib import Path

import numpy as np

from convexcone import (
    Grid,
    GridFunction,
    ProblemSpec,
    SolverSettings,
    build,
    centered_gradient,
    sample,
    solve,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=33)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--eps", type=float, default=1e-7)
    ap.add_argument("--bins", type=int, default=32)
    ap.add_argument("--out", default="out_monopolist")
    args = ap.parse_args()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    grid = Grid.square(0.0, 1.0, args.n)
    spec = ProblemSpec(kind="monopolist", grid=grid, c=args.c)
    qp = build(spec)
    sol = solve(qp, SolverSettings(eps_abs=args.eps, eps_rel=args.eps))
    u = qp.grid_values(sol.x)
    GridFunction(grid, u).to_csv(outdir / "u.csv")

    dx, dy = centered_gradient(grid)
    gx, gy = dx @ u, dy @ u
    counts, xe, ye = np.histogram2d(gx, gy, bins=args.bins, range=[[0, 1], [0, 1]])
    np.savetxt(outdir / "gradient_histogram.csv", counts, delimiter=",", fmt="%d")

    gn = np.hypot(gx, gy)
    excluded = float(np.mean(gn < 0.05))
    diagonal = float(np.mean((gn >= 0.05) & (np.abs(gx - gy) < 0.02)))
    spread = float(np.mean((gn >= 0.05) & (np.abs(gx - gy) >= 0.02)))
    print(f"status={sol.status} objective={sol.objective:.6f} profit={-sol.objective:.6f}")
    print(f"zero-product share: {excluded:.2%}")
    print(f"diagonal-segment share: {diagonal:.2%}")
    print(f"customized share: {spread:.2%}")
    print(f"outputs in {outdir}/")


if __name__ == "__main__":
    main()
