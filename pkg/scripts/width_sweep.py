#!/usr/bin/env python3
"""Stencil-width sensitivity experiments.

Projects a spiky exponential pit and worst-case rotated quadratics onto the
cone for widths 1 to 4 and reports how far the coarse-stencil minimizers sit
from the width-4 one.
"""

import argparse
import math

import numpy as np

from convexcone import (
    Grid,
    ProblemSpec,
    RotatedQuadratic,
    SolverSettings,
    build,
    sample,
    solve,
)


def project(grid, target, width, eps):
    spec = ProblemSpec(kind="projection", norm="l2", grid=grid, target=target,
                       width=width, quadrature="zeroth")
    qp = build(spec)
    sol = solve(qp, SolverSettings(eps_abs=eps, eps_rel=eps))
    if sol.status != "optimal":
        raise RuntimeError(f"solver returned {sol.status}")
    return qp.grid_values(sol.x)


def pit_experiment(n, eps):
    grid = Grid.square(0.0, 1.0, n)
    target = sample(grid, lambda x, y: -math.exp(-30.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2)))
    sols = {w: project(grid, target, w, eps) for w in (1, 2, 3, 4)}
    gaps = [float(np.abs(sols[w] - sols[4]).max()) for w in (1, 2, 3)]
    print(f"pit exponential, n={n}: max|u_w - u_4| for w=1,2,3 -> "
          + " ".join(f"{g:.4f}" for g in gaps))


def rotated_experiment(alpha, n, eps):
    grid = Grid.square(-1.0, 1.0, n)
    target = sample(grid, RotatedQuadratic(alpha, math.pi / 8))
    sols = {w: project(grid, target, w, eps) for w in (1, 2, 3)}
    kept = float(np.abs(sols[1] - target.values).max())
    print(f"rotated quadratic alpha={alpha}, worst-case angle, n={n}: "
          f"|u_1 - target|={kept:.2e}, "
          f"|u_1 - u_2|={np.abs(sols[1] - sols[2]).max():.4f}, "
          f"|u_2 - u_3|={np.abs(sols[2] - sols[3]).max():.4f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[21, 31])
    ap.add_argument("--eps", type=float, default=1e-8)
    args = ap.parse_args()
    for n in args.sizes:
        pit_experiment(n, args.eps)
    for alpha in (-0.1, -0.05):
        rotated_experiment(alpha, 21, args.eps)


if __name__ == "__main__":
    main()
