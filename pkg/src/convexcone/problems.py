"""Builders that turn each variational problem into a standard-form QP/LP.

Conventions:
  * quadratic gradient terms use the symmetric squared-slope operators
    (gradient_energy), which carry their own cell-measure quadrature;
  * gradients appearing in constraints and in linear objective terms use the
    centered first-derivative matrices;
  * node-sampled integrands use the selected quadrature weights
    (trapezoidal by default);
  * the screening objectives are assembled as the negated profit
    integral c |grad u|^2 / 2 + u - x . grad u, which is bounded below on
    the stated feasible sets; report the absolute value when comparing with
    the analytic optimum.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .cone import inner_cone_rows, second_difference_rows
from .grids import (
    Grid,
    GridFunction,
    assemble_grad_quad_1d,
    centered_gradient,
    from_triplets,
    gradient_energy,
)
from .stencils import StencilSet

PROJECTION_NORMS = ("l1", "l2", "linf", "h1", "h1_0", "h1_gradbox")
PROBLEM_KINDS = (
    "projection",
    "rochet_chone",
    "monopolist",
    "monopolist_variant",
    "convex_envelope",
    "custom_1d_source",
)


@dataclass(frozen=True)
class Quadrature:
    """Positive node weights summing to the domain measure."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


def quadrature_weights(grid: Grid, rule: str = "trapezoidal") -> Quadrature:
    """Node weights for the piecewise-constant ("zeroth") or trapezoidal rule."""
    if rule == "zeroth":
        w = np.full(grid.num_nodes, grid.measure / grid.num_nodes)
        return Quadrature(w)
    if rule == "trapezoidal":
        w1 = np.full(grid.n, grid.h)
        w1[0] = w1[-1] = grid.h / 2.0
        if grid.dim == 1:
            return Quadrature(w1)
        return Quadrature(np.outer(w1, w1).ravel())
    raise ValueError(f"unknown quadrature rule {rule!r}")


@dataclass
class ProblemSpec:
    """Configuration of one variational problem instance."""

    kind: str
    grid: Grid
    norm: str | None = None
    target: GridFunction | None = None
    source: GridFunction | None = None
    width: int = 1
    cone: str = "outer"
    quadrature: str = "trapezoidal"
    anchors: tuple = ()
    c: float = 1.0
    strictness_weight: float = 0.0
    grad_bounds: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ValueError(f"invalid spec: unknown problem kind {self.kind!r}")
        if self.cone not in ("outer", "inner"):
            raise ValueError(f"invalid spec: cone must be 'outer' or 'inner', got {self.cone!r}")
        if self.kind == "projection":
            if self.norm not in PROJECTION_NORMS:
                raise ValueError(f"invalid spec: projection norm must be one of {PROJECTION_NORMS}")
            if self.target is None:
                raise ValueError("invalid spec: projection requires a target")
        if self.kind == "convex_envelope" and self.target is None:
            raise ValueError("invalid spec: convex envelope requires a target")
        if self.kind == "custom_1d_source":
            if self.grid.dim != 1:
                raise ValueError("invalid spec: the source problem is one-dimensional")
            if self.source is None:
                raise ValueError("invalid spec: source term required")
        if self.kind in ("monopolist", "rochet_chone") and self.c <= 0:
            raise ValueError(f"invalid spec: coefficient c must be positive, got {self.c}")
        for gf in (self.target, self.source):
            if gf is not None and gf.grid != self.grid:
                raise ValueError("invalid spec: target/source sampled on a different grid")


@dataclass
class QpProblem:
    """min 1/2 x'Px + q'x  subject to  lower <= A x <= upper.

    var_index maps variable-group names ("u", "t", "t_k", "gamma", "lam") to
    index ranges; objective_constant records constants dropped from the
    objective so reported values match the continuous functional.
    """

    P: sp.csc_matrix
    q: np.ndarray
    A: sp.csc_matrix
    lower: np.ndarray
    upper: np.ndarray
    var_index: dict
    objective_constant: float = 0.0

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        nv = self.P.shape[0]
        if self.P.shape != (nv, nv) or self.q.shape != (nv,) or self.A.shape[1] != nv:
            raise ValueError("inconsistent problem dimensions")
        if self.A.shape[0] != self.lower.shape[0] or self.A.shape[0] != self.upper.shape[0]:
            raise ValueError("bounds must have one entry per constraint row")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound on some row")
        gap = abs(self.P - self.P.T)
        if gap.nnz and gap.max() > 1e-12 * max(1.0, abs(self.P).max()):
            raise ValueError("P must be symmetric")

    @property
    def num_vars(self) -> int:
        return self.P.shape[0]

    def objective_value(self, x: np.ndarray, include_constant: bool = False) -> float:
        val = float(0.5 * x @ (self.P @ x) + self.q @ x)
        return val + self.objective_constant if include_constant else val

    def grid_values(self, x: np.ndarray) -> np.ndarray:
        r = self.var_index["u"]
        return x[r.start : r.stop]


def _layout(n_grid: int, n_t: int, inner: bool) -> dict:
    idx = {"u": range(0, n_grid)}
    pos = n_grid
    if n_t == 1:
        idx["t"] = range(pos, pos + 1)
        pos += 1
    elif n_t > 1:
        idx["t_k"] = range(pos, pos + n_t)
        pos += n_t
    if inner:
        idx["gamma"] = range(pos, pos + 1)
        idx["lam"] = range(pos + 1, pos + 2)
        pos += 2
    idx["total"] = range(0, pos)
    return idx


def _pad(A: sp.spmatrix, nv: int, col: int = 0) -> sp.csc_matrix:
    """Embed A's columns at offset col into a width-nv block."""
    m, k = A.shape
    blocks = []
    if col:
        blocks.append(sp.csc_matrix((m, col)))
    blocks.append(A)
    if nv - col - k:
        blocks.append(sp.csc_matrix((m, nv - col - k)))
    return sp.hstack(blocks).tocsc() if len(blocks) > 1 else A.tocsc()


def _cone_block(spec: ProblemSpec, nv: int, idx: dict, q: np.ndarray):
    """Cone rows at full problem width; inner kind adds its strictness term to q."""
    stencil = StencilSet.make(spec.width, spec.grid.dim)
    if spec.cone == "outer":
        cc = second_difference_rows(spec.grid, stencil)
        return _pad(cc.A, nv), cc.lower, cc.upper
    cc = inner_cone_rows(spec.grid, stencil, spec.strictness_weight)
    n_grid = spec.grid.num_nodes
    a_u = cc.A[:, :n_grid]
    a_aux = cc.A[:, n_grid:]
    g0 = idx["gamma"].start
    a = sp.hstack(
        [a_u, sp.csc_matrix((cc.A.shape[0], g0 - n_grid)), a_aux]
    ).tocsc()
    q[g0] += -cc.strictness_weight
    q[g0 + 1] += cc.strictness_weight
    return a, cc.lower, cc.upper


def _equality_rows(nodes, values, nv):
    nodes = np.asarray(nodes, dtype=int)
    values = np.asarray(values, dtype=float)
    a = from_triplets(np.arange(nodes.size), nodes, np.ones(nodes.size), (nodes.size, nv))
    return a, values.copy(), values.copy()


def _assemble(P_u, q, rows, idx, constant, grid):
    nv = idx["total"].stop
    n_grid = grid.num_nodes
    if nv > n_grid:
        P = sp.block_diag([P_u, sp.csc_matrix((nv - n_grid, nv - n_grid))]).tocsc()
    else:
        P = P_u.tocsc()
    A = sp.vstack([r[0] for r in rows]).tocsc()
    lower = np.concatenate([np.broadcast_to(r[1], (r[0].shape[0],)) for r in rows])
    upper = np.concatenate([np.broadcast_to(r[2], (r[0].shape[0],)) for r in rows])
    return QpProblem(P, q, A, lower, upper, idx, constant)


def build_projection(spec: ProblemSpec) -> QpProblem:
    """Projection of the target onto the cone in the requested norm.

    l2/h1 variants give QPs; linf and l1 are linearized with one (resp. N)
    auxiliary bound variables.  The h1 norms match gradients only (the
    seminorm), so their minimizers are determined up to an additive constant
    unless an anchor is supplied.
    """
    if spec.kind != "projection":
        raise ValueError("invalid spec: build_projection needs kind='projection'")
    grid = spec.grid
    g = spec.target.values
    w = quadrature_weights(grid, spec.quadrature).weights
    n = grid.num_nodes
    norm = spec.norm
    n_t = 1 if norm == "linf" else (n if norm == "l1" else 0)
    idx = _layout(n, n_t, spec.cone == "inner")
    nv = idx["total"].stop
    q = np.zeros(nv)
    constant = 0.0
    rows = []

    if norm == "l2":
        P_u = sp.diags(2.0 * w).tocsc()
        q[:n] = -2.0 * w * g
        constant = float(w @ (g * g))
    elif norm in ("h1", "h1_0", "h1_gradbox"):
        G = gradient_energy(grid)
        P_u = (2.0 * G).tocsc()
        q[:n] = -2.0 * (G @ g)
        constant = float(g @ (G @ g))
        if norm == "h1_0":
            bnodes = np.flatnonzero(grid.boundary_mask())
            rows.append(_equality_rows(bnodes, np.zeros(bnodes.size), nv))
        if norm == "h1_gradbox":
            lo, hi = spec.grad_bounds
            for D in centered_gradient(grid):
                rows.append((_pad(D, nv), lo, hi))
    elif norm in ("linf", "l1"):
        P_u = sp.csc_matrix((n, n))
        eye = sp.identity(n, format="csc")
        if norm == "linf":
            t_col = idx["t"].start
            t_block = from_triplets(np.arange(n), np.full(n, t_col), np.ones(n), (n, nv))
            q[t_col] = 1.0
        else:
            t0 = idx["t_k"].start
            t_block = _pad(eye, nv, col=t0)
            q[t0 : t0 + n] = w
        u_block = _pad(eye, nv)
        rows.append((u_block + t_block, g, np.full(n, np.inf)))   # u + t >= g
        rows.append((u_block - t_block, np.full(n, -np.inf), g))  # u - t <= g
    else:
        raise ValueError(f"invalid spec: unknown norm {norm!r}")

    rows.append(_cone_block(spec, nv, idx, q))
    for node, value in spec.anchors:
        rows.append(_equality_rows([node], [value], nv))
    return _assemble(P_u, q, rows, idx, constant, grid)


def build_envelope(spec: ProblemSpec) -> QpProblem:
    """Largest convex minorant: weighted-l2 fit subject to u <= target."""
    if spec.target is None:
        raise ValueError("invalid spec: convex envelope requires a target")
    grid = spec.grid
    g = spec.target.values
    w = quadrature_weights(grid, spec.quadrature).weights
    n = grid.num_nodes
    idx = _layout(n, 0, spec.cone == "inner")
    nv = idx["total"].stop
    q = np.zeros(nv)
    q[:n] = -2.0 * w * g
    P_u = sp.diags(2.0 * w).tocsc()
    rows = [(_pad(sp.identity(n, format="csc"), nv), np.full(n, -np.inf), g)]
    rows.append(_cone_block(spec, nv, idx, q))
    for node, value in spec.anchors:
        rows.append(_equality_rows([node], [value], nv))
    return _assemble(P_u, q, rows, idx, float(w @ (g * g)), grid)


def _screening_linear_term(grid: Grid, w: np.ndarray) -> np.ndarray:
    """Linear coefficients of the negated-profit integral of u - x . grad u."""
    coords = grid.nodes()
    q = w.copy()
    for axis, D in enumerate(centered_gradient(grid)):
        q -= D.T @ (w * coords[:, axis])
    return q


def build_monopolist(spec: ProblemSpec) -> QpProblem:
    """Quadratic screening problem: min c |grad u|^2 / 2 + u - x . grad u, u >= 0."""
    if spec.grid.dim != 2:
        raise ValueError("invalid spec: the screening problem is two-dimensional")
    grid = spec.grid
    w = quadrature_weights(grid, spec.quadrature).weights
    n = grid.num_nodes
    idx = _layout(n, 0, spec.cone == "inner")
    nv = idx["total"].stop
    q = np.zeros(nv)
    q[:n] = _screening_linear_term(grid, w)
    P_u = (spec.c * gradient_energy(grid)).tocsc()
    rows = [(_pad(sp.identity(n, format="csc"), nv), np.zeros(n), np.full(n, np.inf))]
    rows.append(_cone_block(spec, nv, idx, q))
    for node, value in spec.anchors:
        rows.append(_equality_rows([node], [value], nv))
    return _assemble(P_u, q, rows, idx, 0.0, grid)


def build_monopolist_variant(spec: ProblemSpec) -> QpProblem:
    """Linear screening problem with gradient box [0, 1] and u = 0 at the origin."""
    if spec.grid.dim != 2:
        raise ValueError("invalid spec: the screening problem is two-dimensional")
    grid = spec.grid
    w = quadrature_weights(grid, spec.quadrature).weights
    n = grid.num_nodes
    idx = _layout(n, 0, spec.cone == "inner")
    nv = idx["total"].stop
    q = np.zeros(nv)
    q[:n] = _screening_linear_term(grid, w)
    P_u = sp.csc_matrix((n, n))
    rows = []
    for D in centered_gradient(grid):
        rows.append((_pad(D, nv), 0.0, 1.0))
    rows.append(_equality_rows([grid.node_index(0, 0)], [0.0], nv))
    rows.append(_cone_block(spec, nv, idx, q))
    for node, value in spec.anchors:
        rows.append(_equality_rows([node], [value], nv))
    return _assemble(P_u, q, rows, idx, 0.0, grid)


def build_custom_1d(spec: ProblemSpec) -> QpProblem:
    """1d Dirichlet problem: min of the gradient energy plus a source term."""
    if spec.grid.dim != 1:
        raise ValueError("invalid spec: the source problem is one-dimensional")
    if spec.source is None:
        raise ValueError("invalid spec: source term required")
    grid = spec.grid
    w = quadrature_weights(grid, spec.quadrature).weights
    n = grid.num_nodes
    idx = _layout(n, 0, spec.cone == "inner")
    nv = idx["total"].stop
    q = np.zeros(nv)
    q[:n] = w * spec.source.values
    P_u = (grid.h * assemble_grad_quad_1d(grid.n, grid.h)).tocsc()
    rows = [_equality_rows([0, n - 1], [0.0, 0.0], nv)]
    rows.append(_cone_block(spec, nv, idx, q))
    for node, value in spec.anchors:
        rows.append(_equality_rows([node], [value], nv))
    return _assemble(P_u, q, rows, idx, 0.0, grid)


def build(spec: ProblemSpec) -> QpProblem:
    """Dispatch a ProblemSpec to its builder."""
    if spec.kind == "projection":
        return build_projection(spec)
    if spec.kind == "convex_envelope":
        return build_envelope(spec)
    if spec.kind == "monopolist":
        return build_monopolist(spec)
    if spec.kind == "rochet_chone":
        return build_monopolist(dataclasses.replace(spec, kind="monopolist", c=1.0))
    if spec.kind == "monopolist_variant":
        return build_monopolist_variant(spec)
    if spec.kind == "custom_1d_source":
        return build_custom_1d(spec)
    raise ValueError(f"invalid spec: unknown kind {spec.kind!r}")


def anchor(qp: QpProblem, node: int, value: float) -> QpProblem:
    """Return a copy of qp with the extra equality row u_node = value."""
    r = qp.var_index["u"]
    if not r.start <= node < r.stop:
        raise ValueError(f"anchor node {node} outside the grid-variable range")
    row = from_triplets([0], [node], [1.0], (1, qp.num_vars))
    return QpProblem(
        qp.P,
        qp.q.copy(),
        sp.vstack([qp.A, row]).tocsc(),
        np.append(qp.lower, value),
        np.append(qp.upper, value),
        dict(qp.var_index),
        qp.objective_constant,
    )


def spec_from_json(path) -> ProblemSpec:
    """Load a ProblemSpec from its JSON file format.

    Schema: {kind, norm?, grid: {n, bounds}, width, cone, quadrature,
    target_csv?, params: {c?, strictness_weight?}}.  bounds is a list of one
    or two [a, b] pairs; dimension is inferred from its length.
    """
    with open(path) as fh:
        doc = json.load(fh)
    gspec = doc["grid"]
    bounds = tuple(tuple(map(float, b)) for b in gspec["bounds"])
    grid = Grid(len(bounds), int(gspec["n"]), bounds)
    params = doc.get("params", {})
    kind = doc["kind"]
    target = source = None
    if "target_csv" in doc:
        gf = GridFunction.from_csv(doc["target_csv"], grid)
        if kind == "custom_1d_source":
            source = gf
        else:
            target = gf
    kwargs = {}
    if "grad_bounds" in params:
        kwargs["grad_bounds"] = tuple(params["grad_bounds"])
    return ProblemSpec(
        kind=kind,
        grid=grid,
        norm=doc.get("norm"),
        target=target,
        source=source,
        width=int(doc.get("width", 1)),
        cone=doc.get("cone", "outer"),
        quadrature=doc.get("quadrature", "trapezoidal"),
        c=float(params.get("c", 1.0)),
        strictness_weight=float(params.get("strictness_weight", 0.0)),
        **kwargs,
    )
