#!/usr/bin/env python3
"""1d projection gallery and the step-source problem, written as CSV curves.

Emits the projections of sin(pi x) in all six norms, plus the constrained and
unconstrained minimizers of the 1d step-source energy for plotting.
"""

import argparse
import math
from pathlib import Path

import numpy as np

from convexcone import (
    STEP1D_A_STAR,
    Grid,
    GridFunction,
    ProblemSpec,
    SolverSettings,
    build,
    sample,
    solve,
    step1d_value,
)

NORMS = ("l1", "l2", "linf", "h1", "h1_0", "h1_gradbox")


def unconstrained_step_min(c, x):
    """Minimizer of the step-source energy without the convexity constraint."""
    if x < 0:
        return c * x * (x + 1.0) / 2.0
    return c * x * (x - 1.0) / 2.0


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=201)
    ap.add_argument("--c", type=float, default=1.0)
    # figure-grade tolerance; the l1 program has a long first-order tail
    ap.add_argument("--eps", type=float, default=1e-5)
    ap.add_argument("--out", default="out_projections_1d")
    args = ap.parse_args()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    grid = Grid.line(-1.0, 1.0, args.n)
    target = sample(grid, lambda x: math.sin(math.pi * x))
    target.to_csv(outdir / "target_sin_pi.csv")
    mid = args.n // 2
    for norm in NORMS:
        anchors = ((mid, float(target.values[mid])),) if norm in ("h1", "h1_gradbox") else ()
        spec = ProblemSpec(kind="projection", norm=norm, grid=grid, target=target,
                           grad_bounds=(0.0, 1.0), anchors=anchors)
        qp = build(spec)
        sol = solve(qp, SolverSettings(eps_abs=args.eps, eps_rel=args.eps, max_iter=400_000))
        GridFunction(grid, qp.grid_values(sol.x)).to_csv(outdir / f"proj_{norm}.csv")
        print(f"{norm:10s} status={sol.status} objective={sol.objective + qp.objective_constant:.6g}")

    spec = ProblemSpec(kind="custom_1d_source", grid=grid,
                       source=sample(grid, lambda x: args.c * float(np.sign(x))))
    qp = build(spec)
    sol = solve(qp, SolverSettings(eps_abs=args.eps, eps_rel=args.eps))
    GridFunction(grid, qp.grid_values(sol.x)).to_csv(outdir / "step_constrained.csv")
    exact = GridFunction(grid, np.array([step1d_value(args.c, STEP1D_A_STAR, x)
                                         for x in grid.axis()]))
    exact.to_csv(outdir / "step_exact.csv")
    unc = GridFunction(grid, np.array([unconstrained_step_min(args.c, x)
                                       for x in grid.axis()]))
    unc.to_csv(outdir / "step_unconstrained.csv")
    err = np.abs(qp.grid_values(sol.x) - exact.values).max()
    print(f"step source: status={sol.status} objective={sol.objective:.6f} "
          f"Linf error vs exact={err:.2e}")
    print(f"curves written to {outdir}/")


if __name__ == "__main__":
    main()
