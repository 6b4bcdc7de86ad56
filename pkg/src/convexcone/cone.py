"""Polyhedral approximations of the cone of convex grid functions.

The outer cone requires every directional second difference to be
nonnegative; it contains all convex grid functions plus slightly nonconvex
ones, with the eigenvalue ratio bounded below by -tan^2(dtheta).  The inner
cone couples two auxiliary variables (gamma, lam) so that the smallest second
difference dominates tan^2(dtheta) times the largest, which certifies genuine
convexity.

Rows are normalized by h^2 |v|^2 so margins are comparable across directions
of different lengths; normalization does not change the outer feasible set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grids import Grid, GridFunction, from_triplets
from .stencils import Direction, StencilSet, convexity_threshold


@dataclass(frozen=True)
class ConeConstraints:
    """Sparse rows l <= A z <= u encoding a cone approximation.

    For kind "outer" the variables are the grid values alone (num_aux = 0).
    For kind "inner" two auxiliary variables gamma and lam are appended after
    the grid values (num_aux = 2); row_index holds None for the coupling rows
    that involve only the auxiliaries.
    """

    kind: str
    A: sp.csc_matrix
    lower: np.ndarray
    upper: np.ndarray
    num_aux: int
    row_index: tuple
    strictness_weight: float = 0.0


def _pair_rows(grid: Grid, stencil: StencilSet):
    """Second-difference triplets for every (node, direction) pair that fits.

    A pair is emitted iff both neighbors node +- v lie inside the grid; wide
    directions are simply absent near the boundary.  Rows are ordered by
    (node, direction index).
    """
    if stencil.dim != grid.dim:
        raise ValueError(f"stencil dimension {stencil.dim} != grid dimension {grid.dim}")
    n, h = grid.n, grid.h
    nodes, dir_ids, plus, minus, scales = [], [], [], [], []
    for d_idx, v in enumerate(stencil.directions):
        if grid.dim == 1:
            k = np.arange(1, n - 1)
            off = 1
            norm2 = 1.0
        else:
            p, q = v.p, v.q
            ii = np.arange(abs(p), n - abs(p))
            jj = np.arange(abs(q), n - abs(q))
            if ii.size == 0 or jj.size == 0:
                continue
            k = (jj[:, None] * n + ii[None, :]).ravel()
            off = q * n + p
            norm2 = float(p * p + q * q)
        nodes.append(k)
        dir_ids.append(np.full(k.size, d_idx))
        plus.append(k + off)
        minus.append(k - off)
        scales.append(np.full(k.size, 1.0 / (h * h * norm2)))
    if not nodes:
        empty = np.empty(0, dtype=int)
        return empty, empty, empty, empty, np.empty(0)
    nodes = np.concatenate(nodes)
    dir_ids = np.concatenate(dir_ids)
    plus = np.concatenate(plus)
    minus = np.concatenate(minus)
    scales = np.concatenate(scales)
    order = np.lexsort((dir_ids, nodes))
    return nodes[order], dir_ids[order], plus[order], minus[order], scales[order]


def _second_diff_matrix(grid: Grid, stencil: StencilSet, num_cols: int):
    nodes, dir_ids, plus, minus, scales = _pair_rows(grid, stencil)
    m = nodes.size
    rows = np.repeat(np.arange(m), 3)
    cols = np.column_stack([nodes, plus, minus]).ravel()
    vals = np.column_stack([-2.0 * scales, scales, scales]).ravel()
    a = from_triplets(rows, cols, vals, (m, num_cols))
    index = tuple(
        (grid.multi_index(int(k)), stencil.directions[int(d)])
        for k, d in zip(nodes, dir_ids)
    )
    return a, index


def second_difference_rows(grid: Grid, stencil: StencilSet) -> ConeConstraints:
    """Outer-cone rows: normalized directional second differences >= 0."""
    a, index = _second_diff_matrix(grid, stencil, grid.num_nodes)
    m = a.shape[0]
    return ConeConstraints(
        kind="outer",
        A=a,
        lower=np.zeros(m),
        upper=np.full(m, np.inf),
        num_aux=0,
        row_index=index,
    )


def inner_cone_rows(
    grid: Grid, stencil: StencilSet, strictness_weight: float = 0.0
) -> ConeConstraints:
    """Inner-cone rows over (grid values, gamma, lam).

    Encodes 0 <= gamma <= s_v(u) <= lam for every (node, direction) second
    difference s_v, plus gamma >= tan^2(dtheta) * lam.  The strictness weight
    is the coefficient a problem builder should put on (lam - gamma) in the
    objective to force strict inequalities; it is reported, not applied here.
    """
    if strictness_weight < 0:
        raise ValueError(f"strictness weight must be >= 0, got {strictness_weight}")
    t2 = convexity_threshold(stencil.dtheta)
    nv = grid.num_nodes + 2
    g_col, l_col = grid.num_nodes, grid.num_nodes + 1
    s, index = _second_diff_matrix(grid, stencil, nv)
    m = s.shape[0]
    minus_gamma = from_triplets(np.arange(m), np.full(m, g_col), -np.ones(m), (m, nv))
    minus_lam = from_triplets(np.arange(m), np.full(m, l_col), -np.ones(m), (m, nv))
    coupling = from_triplets(
        [0, 1, 1], [g_col, g_col, l_col], [1.0, 1.0, -t2], (2, nv)
    )
    a = sp.vstack([s + minus_gamma, s + minus_lam, coupling]).tocsc()
    lower = np.concatenate([np.zeros(m), np.full(m, -np.inf), [0.0, 0.0]])
    upper = np.concatenate([np.full(m, np.inf), np.zeros(m), [np.inf, np.inf]])
    return ConeConstraints(
        kind="inner",
        A=a,
        lower=lower,
        upper=upper,
        num_aux=2,
        row_index=index + index + (None, None),
        strictness_weight=float(strictness_weight),
    )


@dataclass(frozen=True)
class CertificateReport:
    """Result of checking a grid function against the outer cone.

    worst_margin is the smallest normalized second difference over all rows;
    eigen_ratio_bound = -tan^2(dtheta) is the guaranteed lower bound on the
    Hessian eigenvalue ratio when the check passes.
    """

    feasible: bool
    worst_margin: float
    eigen_ratio_bound: float
    violations: tuple

    def to_json_dict(self) -> dict:
        return {
            "feasible": bool(self.feasible),
            "worst_margin": float(self.worst_margin),
            "eigen_ratio_bound": float(self.eigen_ratio_bound),
            "violations": [
                {"node": list(node), "direction": list(d.as_tuple()), "value": float(v)}
                for node, d, v in self.violations
            ],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def certify(u: GridFunction, stencil: StencilSet, tolerance: float = 1e-9) -> CertificateReport:
    """Evaluate all outer-cone rows on u and report margins and violations."""
    if tolerance < 0:
        raise ValueError(f"tolerance must be >= 0, got {tolerance}")
    outer = second_difference_rows(u.grid, stencil)
    margins = outer.A @ u.values
    worst = float(margins.min()) if margins.size else np.inf
    bad = np.flatnonzero(margins < -tolerance)
    violations = tuple(
        (outer.row_index[r][0], outer.row_index[r][1], float(margins[r])) for r in bad
    )
    return CertificateReport(
        feasible=bool(bad.size == 0),
        worst_margin=worst,
        eigen_ratio_bound=-stencil.tan2_dtheta,
        violations=violations,
    )
