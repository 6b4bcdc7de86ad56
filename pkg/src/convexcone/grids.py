"""Uniform grids, grid functions, and sparse finite-difference operators.

Operators carry their 1/h or 1/h^2 scaling inside the stored values, and the
integer stencil weights of every row sum to zero, so each operator annihilates
constant vectors exactly (not merely to rounding).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

# All operators and constraint blocks use compressed-column storage.
SparseMatrix = sp.csc_matrix


def from_triplets(rows, cols, vals, shape) -> sp.csc_matrix:
    """Compressed-column matrix from (row, col, value) triplets.

    Duplicate (row, col) pairs are summed during compression.
    """
    mat = sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsc()
    mat.sum_duplicates()
    return mat


@dataclass(frozen=True)
class Grid:
    """Uniform grid on an interval (dim=1) or a square (dim=2).

    Nodes are ordered row-major with y outer and x inner: node k has
    multi-index (i, j) = (k % n, k // n).  In 2d both axes share the same
    node count and spacing.
    """

    dim: int
    n: int
    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"invalid grid: dim must be 1 or 2, got {self.dim}")
        if self.n < 3:
            raise ValueError(f"invalid grid: need at least 3 nodes per axis, got n={self.n}")
        bounds = tuple((float(a), float(b)) for a, b in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        if len(bounds) != self.dim:
            raise ValueError("invalid grid: one (a, b) pair per axis required")
        for a, b in bounds:
            if not (np.isfinite(a) and np.isfinite(b) and b > a):
                raise ValueError(f"invalid grid: bad axis bounds ({a}, {b})")
        if self.dim == 2:
            (a0, b0), (a1, b1) = bounds
            if abs((b0 - a0) - (b1 - a1)) > 1e-12 * max(abs(b0 - a0), 1.0):
                raise ValueError("invalid grid: 2d grids must have equal spacing on both axes")

    @classmethod
    def line(cls, a: float, b: float, n: int) -> "Grid":
        return cls(1, n, ((a, b),))

    @classmethod
    def square(cls, a: float, b: float, n: int) -> "Grid":
        return cls(2, n, ((a, b), (a, b)))

    @property
    def h(self) -> float:
        a, b = self.bounds[0]
        return (b - a) / (self.n - 1)

    @property
    def num_nodes(self) -> int:
        return self.n**self.dim

    @property
    def measure(self) -> float:
        out = 1.0
        for a, b in self.bounds:
            out *= b - a
        return out

    def axis(self, k: int = 0) -> np.ndarray:
        a, b = self.bounds[k]
        return np.linspace(a, b, self.n)

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape (num_nodes, dim), in node order."""
        if self.dim == 1:
            return self.axis(0)[:, None]
        x, y = self.axis(0), self.axis(1)
        return np.column_stack([np.tile(x, self.n), np.repeat(y, self.n)])

    def node_index(self, i: int, j: int = 0) -> int:
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise ValueError(f"multi-index ({i}, {j}) outside grid")
        return j * self.n + i if self.dim == 2 else i

    def multi_index(self, k: int) -> tuple[int, ...]:
        if not (0 <= k < self.num_nodes):
            raise ValueError(f"node {k} outside grid")
        if self.dim == 1:
            return (k,)
        return (k % self.n, k // self.n)

    def boundary_mask(self) -> np.ndarray:
        """Boolean mask over nodes that lie on the boundary in any coordinate."""
        edge = np.zeros(self.n, dtype=bool)
        edge[0] = edge[-1] = True
        if self.dim == 1:
            return edge.copy()
        return np.tile(edge, self.n) | np.repeat(edge, self.n)


@dataclass(frozen=True)
class GridFunction:
    """Real values sampled at the nodes of a grid; the optimization variable."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.shape != (self.grid.num_nodes,):
            raise ValueError(
                f"values must have length {self.grid.num_nodes}, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("value\n")
            for v in self.values:
                fh.write(f"{float(v)!r}\n")

    @classmethod
    def from_csv(cls, path, grid: Grid) -> "GridFunction":
        with open(path) as fh:
            header = fh.readline().strip()
            if header != "value":
                raise ValueError(f"malformed grid-function CSV: expected header 'value', got {header!r}")
            vals = [float(line) for line in fh if line.strip()]
        return cls(grid, np.asarray(vals))

    def to_json_dict(self) -> dict:
        return {
            "grid": {"dim": self.grid.dim, "n": self.grid.n,
                     "bounds": [list(b) for b in self.grid.bounds]},
            "values": [float(v) for v in self.values],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "GridFunction":
        with open(path) as fh:
            doc = json.load(fh)
        g = doc["grid"]
        grid = Grid(g["dim"], g["n"], tuple(tuple(b) for b in g["bounds"]))
        return cls(grid, np.asarray(doc["values"]))


def sample(grid: Grid, f: Callable) -> GridFunction:
    """Sample a pointwise function onto the grid nodes.

    1d functions are called as f(x), 2d as f(x, y).  A non-finite sample
    raises and names the offending node.
    """
    pts = grid.nodes()
    vals = np.empty(grid.num_nodes)
    for k, p in enumerate(pts):
        v = f(*p)
        if not np.isfinite(v):
            raise ValueError(f"sampling error: f is not finite at node {k} = {tuple(p)}")
        vals[k] = v
    return GridFunction(grid, vals)


def _forward_diff_1d(n: int, h: float) -> sp.csc_matrix:
    """(n-1) x n forward difference matrix with values (-1, 1)/h."""
    s = 1.0 / h
    rows = np.repeat(np.arange(n - 1), 2)
    cols = np.column_stack([np.arange(n - 1), np.arange(1, n)]).ravel()
    vals = np.tile([-s, s], n - 1)
    return from_triplets(rows, cols, vals, (n - 1, n))


def _check_spacing(n: int, h: float, n_min: int) -> None:
    if n < n_min:
        raise ValueError(f"invalid grid: operator needs n >= {n_min}, got n={n}")
    if not (h > 0 and np.isfinite(h)):
        raise ValueError(f"invalid grid: spacing must be positive, got h={h}")


def assemble_dxx_1d(n: int, h: float) -> sp.csc_matrix:
    """Second-difference operator at the n-2 interior nodes of a 1d grid.

    Row i holds (1, -2, 1)/h^2 at columns (i, i+1, i+2).
    """
    _check_spacing(n, h, 3)
    s = 1.0 / (h * h)
    rows = np.repeat(np.arange(n - 2), 3)
    cols = (np.arange(n - 2)[:, None] + np.arange(3)[None, :]).ravel()
    vals = np.tile([s, -2.0 * s, s], n - 2)
    return from_triplets(rows, cols, vals, (n - 2, n))


def assemble_grad_quad_1d(n: int, h: float) -> sp.csc_matrix:
    """Square symmetric operator M with u'M u approximating the squared-slope sum.

    Built as (D+)^T D+ from the forward difference matrix, so M is positive
    semidefinite, annihilates constants, and u' M u = sum of squared forward
    slopes.
    """
    _check_spacing(n, h, 2)
    d = _forward_diff_1d(n, h)
    m = (d.T @ d).tocsc()
    m.sum_duplicates()
    return m


def assemble_laplacian_2d(n: int, h: float) -> sp.csc_matrix:
    """Symmetric PSD 5-point stiffness operator on the n x n grid (n^2 x n^2).

    Averaging the forward and backward difference operators per axis is
    equivalent to the Kronecker sum of the 1d squared-slope operator, which is
    how the matrix is assembled.  Corner-diagonal couplings are excluded.
    """
    _check_spacing(n, h, 2)
    m1 = assemble_grad_quad_1d(n, h)
    eye = sp.identity(n, format="csc")
    m = (sp.kron(eye, m1) + sp.kron(m1, eye)).tocsc()
    m.sum_duplicates()
    return m


def assemble_centered_dx(n: int, h: float) -> sp.csc_matrix:
    """n x n first-derivative matrix: centered in the interior, one-sided at the ends.

    Interior rows hold (-1, 0, 1)/(2h); the first and last rows hold
    (-2, 2)/(2h) on the two adjacent columns.
    """
    _check_spacing(n, h, 3)
    s = 1.0 / (2.0 * h)
    rows = [0, 0]
    cols = [0, 1]
    vals = [-2.0 * s, 2.0 * s]
    interior = np.arange(1, n - 1)
    rows += list(np.repeat(interior, 2))
    cols += list(np.column_stack([interior - 1, interior + 1]).ravel())
    vals += list(np.tile([-s, s], n - 2))
    rows += [n - 1, n - 1]
    cols += [n - 2, n - 1]
    vals += [-2.0 * s, 2.0 * s]
    return from_triplets(rows, cols, vals, (n, n))


def centered_gradient(grid: Grid) -> tuple[sp.csc_matrix, ...]:
    """Per-axis centered first-derivative operators on grid nodes.

    Returns (D_x,) in 1d and (D_x, D_y) in 2d, each num_nodes x num_nodes.
    """
    c = assemble_centered_dx(grid.n, grid.h)
    if grid.dim == 1:
        return (c,)
    eye = sp.identity(grid.n, format="csc")
    return (sp.kron(eye, c).tocsc(), sp.kron(c, eye).tocsc())


def gradient_energy(grid: Grid) -> sp.csc_matrix:
    """Quadratic-form matrix G with u'G u approximating the gradient energy integral.

    The squared-slope operators already carry 1/h^2; multiplying by the cell
    measure h^dim makes u'G u a quadrature of the integral of |grad u|^2.
    """
    if grid.dim == 1:
        return (grid.h * assemble_grad_quad_1d(grid.n, grid.h)).tocsc()
    return (grid.h**2 * assemble_laplacian_2d(grid.n, grid.h)).tocsc()
