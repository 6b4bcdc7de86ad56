"""Command-line front end: project, solve, certify, bench.

Every run writes one RunRecord JSON next to its outputs.  Data files contain
no timestamps, so identical flags reproduce byte-identical data; wall times
live only in the RunRecord (and in the bench timing table, which is
documented as non-reproducible).

Exit codes: 0 optimal/feasible, 1 usage or input error, 2 solver failure,
3 certification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .analytic import variant_value
from .cone import certify
from .grids import Grid, GridFunction, centered_gradient, sample
from .problems import ProblemSpec, build, quadrature_weights
from .solver import SolverSettings, solve
from .stencils import StencilSet


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# name -> (dim or None, factory(args) -> pointwise function)
BUILTIN_TARGETS = {
    "zero": (None, lambda a: (lambda *p: 0.0)),
    "sin_pi": (1, lambda a: (lambda x: math.sin(math.pi * x))),
    "sin_2pi": (1, lambda a: (lambda x: math.sin(2.0 * math.pi * x))),
    "neg_x_sq": (1, lambda a: (lambda x: -x * x)),
    "step": (1, lambda a: (lambda x: a.c * float(np.sign(x)))),
    "spiky": (2, lambda a: (lambda x, y: -(4.0 + 5.0 * x * y * y)
                            * math.exp(-30.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2)))),
    "bump": (2, lambda a: (lambda x, y: math.exp(-30.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2)))),
    "pit": (2, lambda a: (lambda x, y: -math.exp(-30.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2)))),
    "rotquad": (2, lambda a: _rotquad(a.alpha, a.theta)),
    "xy": (2, lambda a: (lambda x, y: x * y)),
    "abs_x_minus_3y": (2, lambda a: (lambda x, y: abs(x - 3.0 * y))),
    "sq_x_minus_3y": (2, lambda a: (lambda x, y: (x - 3.0 * y) ** 2)),
}


def _rotquad(alpha, theta):
    from .analytic import RotatedQuadratic

    return RotatedQuadratic(alpha, theta)


def _default_bounds(dim: int) -> tuple[float, float]:
    return (-1.0, 1.0) if dim == 1 else (0.0, 1.0)


def _make_grid(dim: int, n: int, bounds) -> Grid:
    a, b = bounds
    return Grid.line(a, b, n) if dim == 1 else Grid.square(a, b, n)


def _settings(args) -> SolverSettings:
    return SolverSettings(eps_abs=args.eps, eps_rel=args.eps, max_iter=args.max_iter)


def _write_record(outdir: Path, command: str, args, settings, summary, wall, outputs):
    record = {
        "command": command,
        "flags": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "solver_settings": dataclasses.asdict(settings) if settings else None,
        "solution": summary,
        "wall_time_s": wall,
        "outputs": [str(p) for p in outputs],
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    path = outdir / "record.json"
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path


def _solution_summary(sol, qp) -> dict:
    return {
        "status": sol.status,
        "objective": sol.objective,
        "objective_with_constant": sol.objective + qp.objective_constant,
        "iterations": sol.iterations,
        "primal_residual": sol.primal_residual,
        "dual_residual": sol.dual_residual,
    }


def _load_target(args, dim_flag) -> tuple[Grid, GridFunction]:
    if args.input:
        if dim_flag is None:
            raise ValueError("--input needs --dim")
        grid = _make_grid(dim_flag, args.n, args.bounds or _default_bounds(dim_flag))
        return grid, GridFunction.from_csv(args.input, grid)
    if args.target not in BUILTIN_TARGETS:
        raise ValueError(f"unknown target {args.target!r}; builtins: {sorted(BUILTIN_TARGETS)}")
    dim, factory = BUILTIN_TARGETS[args.target]
    dim = dim or dim_flag or 2
    grid = _make_grid(dim, args.n, args.bounds or _default_bounds(dim))
    return grid, sample(grid, factory(args))


def _emit_solution(outdir: Path, qp, sol, grid) -> list[Path]:
    u = GridFunction(grid, qp.grid_values(sol.x))
    paths = [outdir / "u.csv", outdir / "u.json", outdir / "solution.json"]
    u.to_csv(paths[0])
    u.to_json(paths[1])
    sol.to_json(paths[2])
    return paths


def _emit_gradient_files(outdir: Path, grid, values, bins, levels) -> list[Path]:
    ops = centered_gradient(grid)
    grads = [D @ values for D in ops]
    paths = []
    gpath = outdir / "gradient_map.csv"
    with open(gpath, "w") as fh:
        fh.write(",".join(["gx", "gy"][: len(grads)]) + "\n")
        for row in zip(*grads):
            fh.write(",".join(f"{float(v)!r}" for v in row) + "\n")
    paths.append(gpath)
    if grid.dim == 2:
        counts, xe, ye = np.histogram2d(
            grads[0], grads[1], bins=bins, range=[[0.0, 1.0], [0.0, 1.0]]
        )
        hpath = outdir / "gradient_histogram.json"
        with open(hpath, "w") as fh:
            json.dump(
                {"bins": bins, "range": [[0.0, 1.0], [0.0, 1.0]],
                 "x_edges": list(map(float, xe)), "y_edges": list(map(float, ye)),
                 "counts": counts.astype(int).tolist()},
                fh, sort_keys=True)
            fh.write("\n")
        paths.append(hpath)
        paths.append(_emit_contours(outdir, grid, values, levels))
    return paths


def _emit_contours(outdir: Path, grid, values, num_levels) -> Path:
    from contourpy import contour_generator

    z = values.reshape(grid.n, grid.n)
    gen = contour_generator(x=grid.axis(0), y=grid.axis(1), z=z)
    lo, hi = float(values.min()), float(values.max())
    levels = np.linspace(lo, hi, num_levels + 2)[1:-1] if hi > lo else []
    doc = {"levels": [float(l) for l in levels], "polylines": {}}
    for lev in levels:
        lines = gen.lines(float(lev))
        doc["polylines"][f"{float(lev)!r}"] = [
            [[float(p[0]), float(p[1])] for p in line] for line in lines
        ]
    path = outdir / "contours.json"
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")
    return path


def cmd_project(args) -> int:
    t0 = time.time()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        grid, target = _load_target(args, args.dim)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    spec = ProblemSpec(
        kind="projection", norm=args.norm, grid=grid, target=target,
        width=args.width, cone=args.cone, quadrature=args.quadrature,
        strictness_weight=args.strictness_weight,
    )
    if args.norm in ("h1", "h1_gradbox"):
        # the gradient-matching objective is shift invariant; pin one value
        node = int(np.argmin(np.abs(grid.nodes()).sum(axis=1)))
        spec.anchors = ((node, float(target.values[node])),)
    qp = build(spec)
    settings = _settings(args)
    sol = solve(qp, settings)
    outputs = _emit_solution(outdir, qp, sol, grid)
    _write_record(outdir, "project", args, settings, _solution_summary(sol, qp),
                  time.time() - t0, outputs)
    print(f"project norm={args.norm} n={args.n} width={args.width}: {sol.status}, "
          f"objective {sol.objective + qp.objective_constant:.6g}")
    return 0 if sol.status == "optimal" else 2


def cmd_solve(args) -> int:
    t0 = time.time()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    kind = args.kind
    if kind == "step1d":
        grid = _make_grid(1, args.n, args.bounds or (-1.0, 1.0))
        source = sample(grid, lambda x: args.c * float(np.sign(x)))
        spec = ProblemSpec(kind="custom_1d_source", grid=grid, source=source,
                           width=args.width, cone=args.cone,
                           quadrature=args.quadrature,
                           strictness_weight=args.strictness_weight)
    else:
        grid = _make_grid(2, args.n, args.bounds or (0.0, 1.0))
        spec = ProblemSpec(kind=kind, grid=grid, width=args.width, cone=args.cone,
                           quadrature=args.quadrature, c=args.c,
                           strictness_weight=args.strictness_weight)
    qp = build(spec)
    settings = _settings(args)
    sol = solve(qp, settings)
    u = qp.grid_values(sol.x)
    outputs = _emit_solution(outdir, qp, sol, grid)
    outputs += _emit_gradient_files(outdir, grid, u, args.bins, args.levels)
    _write_record(outdir, "solve", args, settings, _solution_summary(sol, qp),
                  time.time() - t0, outputs)
    print(f"solve kind={kind} n={args.n}: {sol.status}, "
          f"objective {sol.objective + qp.objective_constant:.6g}")
    return 0 if sol.status == "optimal" else 2


def cmd_certify(args) -> int:
    t0 = time.time()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        grid = _make_grid(args.dim, args.n, args.bounds or _default_bounds(args.dim))
        u = GridFunction.from_csv(args.input, grid)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    stencil = StencilSet.make(args.width, grid.dim)
    report = certify(u, stencil, args.tolerance)
    cpath = outdir / "certificate.json"
    report.to_json(cpath)
    _write_record(outdir, "certify", args, None,
                  {"feasible": report.feasible, "worst_margin": report.worst_margin,
                   "eigen_ratio_bound": report.eigen_ratio_bound,
                   "num_violations": len(report.violations)},
                  time.time() - t0, [cpath])
    print(f"certify width={args.width}: feasible={report.feasible} "
          f"worst_margin={report.worst_margin:.3g} "
          f"eigen_ratio_bound={report.eigen_ratio_bound:.3g}")
    return 0 if report.feasible else 3


def cmd_bench(args) -> int:
    t0 = time.time()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rules = ("zeroth", "trapezoidal")
    errors: dict[str, dict[int, str]] = {r: {} for r in rules}
    times: dict[str, dict[int, str]] = {r: {} for r in rules}
    settings = _settings(args)
    for rule in rules:
        for n in args.sizes:
            cell0 = time.time()
            try:
                grid = Grid.square(0.0, 1.0, n)
                spec = ProblemSpec(kind="monopolist_variant", grid=grid, width=1,
                                   quadrature=rule)
                qp = build(spec)
                sol = solve(qp, settings)
                if sol.status != "optimal":
                    raise RuntimeError(f"solver status {sol.status}")
                exact = sample(grid, variant_value).values
                err = float(np.abs(qp.grid_values(sol.x) - exact).max())
                errors[rule][n] = f"{err:.3g}"
            except Exception as exc:  # record per-cell failures, keep going
                errors[rule][n] = "x"
                print(f"bench cell {rule} n={n} failed: {exc}", file=sys.stderr)
            times[rule][n] = f"{time.time() - cell0:.2f}"
    csv_path = outdir / "bench.csv"
    with open(csv_path, "w") as fh:
        fh.write("method," + ",".join(str(n) for n in args.sizes) + "\n")
        for rule in rules:
            fh.write(rule + "," + ",".join(errors[rule][n] for n in args.sizes) + "\n")
    md_path = outdir / "bench.md"
    with open(md_path, "w") as fh:
        fh.write("# Screening-variant benchmark\n\n")
        fh.write("Max-norm error against the exact max-affine solution.\n\n")
        header = "| method | " + " | ".join(str(n) for n in args.sizes) + " |\n"
        rule_sep = "|---" * (len(args.sizes) + 1) + "|\n"
        fh.write(header + rule_sep)
        for rule in rules:
            fh.write(f"| {rule} | " + " | ".join(errors[rule][n] for n in args.sizes) + " |\n")
        fh.write("\nWall time (s), not reproducible run to run:\n\n")
        fh.write(header + rule_sep)
        for rule in rules:
            fh.write(f"| {rule} | " + " | ".join(times[rule][n] for n in args.sizes) + " |\n")
    _write_record(outdir, "bench", args, settings,
                  {"errors": errors, "times": times}, time.time() - t0,
                  [csv_path, md_path])
    for rule in rules:
        print(rule, " ".join(f"n={n}:{errors[rule][n]}" for n in args.sizes))
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=21, help="nodes per axis")
    p.add_argument("--bounds", type=_bounds_arg, default=None,
                   help="axis bounds as 'a,b' (same on both axes in 2d)")
    p.add_argument("--width", type=int, default=1, help="stencil width")
    p.add_argument("--cone", choices=("outer", "inner"), default="outer")
    p.add_argument("--strictness-weight", type=float, default=0.0)
    p.add_argument("--quadrature", choices=("zeroth", "trapezoidal"),
                   default="trapezoidal")
    p.add_argument("--c", type=float, default=1.0, help="problem coefficient")
    p.add_argument("--alpha", type=float, default=-0.5, help="rotquad eigenvalue")
    p.add_argument("--theta", type=float, default=math.pi / 8, help="rotquad angle")
    p.add_argument("--eps", type=float, default=1e-6, help="solver tolerance")
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--out", default=".", help="output directory")


def _bounds_arg(text: str) -> tuple[float, float]:
    parts = [float(t) for t in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("bounds must be 'a,b'")
    return (parts[0], parts[1])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="convexcone",
                     description="Variational problems with convexity constraints.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("project", help="project a target onto the convex cone")
    _add_common(p)
    p.add_argument("--norm", required=True,
                   choices=("l1", "l2", "linf", "h1", "h1_0", "h1_gradbox"))
    p.add_argument("--target", default=None, help="builtin target name")
    p.add_argument("--input", default=None, help="target CSV (one value per line)")
    p.add_argument("--dim", type=int, choices=(1, 2), default=None)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("solve", help="solve a named variational problem")
    _add_common(p)
    p.add_argument("--kind", required=True,
                   choices=("monopolist", "monopolist_variant", "rochet_chone", "step1d"))
    p.add_argument("--bins", type=int, default=32, help="gradient histogram bins per axis")
    p.add_argument("--levels", type=int, default=10, help="number of contour levels")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="check a grid function against the cone")
    _add_common(p)
    p.add_argument("--input", required=True, help="grid-function CSV")
    p.add_argument("--dim", type=int, choices=(1, 2), default=2)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("bench", help="error/timing table for the screening variant")
    _add_common(p)
    p.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32, 64])
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
