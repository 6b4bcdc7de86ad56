"""Sparse convex QP/LP solver: operator splitting with box-constrained rows.

Solves min 1/2 x'Px + q'x subject to l <= Ax <= u by alternating a regularized
linear solve in (x, slack) with a projection of the slack onto [l, u], with
dual updates, static Ruiz equilibration, adaptive penalty, and an optional
active-set polish.  A dense exhaustive active-set oracle for tiny instances
provides an independent ground truth.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

if TYPE_CHECKING:
    from .problems import QpProblem


@dataclass
class SolverSettings:
    eps_abs: float = 1e-6
    eps_rel: float = 1e-6
    max_iter: int = 100_000
    rho: float = 0.1
    rho_min: float = 1e-6
    rho_max: float = 1e6
    rho_eq_scale: float = 1e3          # penalty boost on equality rows
    adaptive_rho: bool = True
    adaptive_interval: int = 100       # penalty adapts at most every 50 iterations
    adaptive_threshold: float = 5.0
    adaptive_max_updates: int = 8      # freeze rho once its scale is found
    sigma: float = 1e-6
    alpha: float = 1.6
    check_interval: int = 25
    eps_infeas: float = 1e-7
    scaling_iters: int = 10
    polish: bool = True
    polish_delta: float = 1e-8
    polish_refine_iters: int = 4
    seed: int | None = None            # reserved for tie-break perturbation; unused

    def validate(self) -> None:
        if self.eps_abs <= 0 or self.eps_rel <= 0:
            raise ValueError("termination tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class Solution:
    x: np.ndarray
    objective: float
    status: str                        # optimal | max_iter | primal_infeasible | dual_infeasible
    iterations: int
    primal_residual: float
    dual_residual: float
    y: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "status": self.status,
            "objective": float(self.objective),
            "iterations": int(self.iterations),
            "primal_residual": float(self.primal_residual),
            "dual_residual": float(self.dual_residual),
            "x": [float(v) for v in self.x],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")


def _norm_inf(v) -> float:
    return float(np.abs(v).max()) if np.size(v) else 0.0


def _col_max_abs(mat) -> np.ndarray:
    if mat.shape[0] == 0 or mat.nnz == 0:
        return np.zeros(mat.shape[1])
    return np.asarray(abs(mat).max(axis=0).todense()).ravel()


def _row_max_abs(mat) -> np.ndarray:
    if mat.shape[1] == 0 or mat.nnz == 0:
        return np.zeros(mat.shape[0])
    return np.asarray(abs(mat).max(axis=1).todense()).ravel()


def _ruiz_equilibrate(P, q, A, iters):
    """Diagonal scaling of [P A'; A 0] plus a cost scaling factor.

    Returns (Ps, qs, As, d, e, c) with Ps = c D P D, As = E A D, qs = c D q.
    """
    n, m = P.shape[0], A.shape[0]
    d = np.ones(n)
    e = np.ones(m)
    Ps, As = P.astype(float), A.astype(float)
    for _ in range(iters):
        cx = np.maximum(_col_max_abs(Ps), _col_max_abs(As))
        cy = _row_max_abs(As)
        dx = np.where(cx > 1e-12, 1.0 / np.sqrt(cx), 1.0)
        dy = np.where(cy > 1e-12, 1.0 / np.sqrt(cy), 1.0)
        Dx = sp.diags(dx)
        Ps = (Dx @ Ps @ Dx).tocsc()
        As = (sp.diags(dy) @ As @ Dx).tocsc()
        d *= dx
        e *= dy
    qs = d * q
    gmean = float(_col_max_abs(Ps).mean()) if n else 0.0
    denom = max(gmean, _norm_inf(qs))
    c = 1.0 / denom if denom > 1e-12 else 1.0
    Ps = (c * Ps).tocsc()
    qs = c * qs
    return Ps, qs, As, d, e, c


def _is_primal_infeasible(A, l, u, dy, tol) -> bool:
    nrm = _norm_inf(dy)
    if nrm <= tol:
        return False
    v = dy / nrm
    if _norm_inf(A.T @ v) > tol:
        return False
    u_fin = np.isfinite(u)
    l_fin = np.isfinite(l)
    if np.any(~u_fin & (v > tol)) or np.any(~l_fin & (v < -tol)):
        return False
    support = float(np.sum(u[u_fin] * np.maximum(v[u_fin], 0.0))) + float(
        np.sum(l[l_fin] * np.minimum(v[l_fin], 0.0))
    )
    return support < -tol


def _is_dual_infeasible(P, q, A, l, u, dx, tol) -> bool:
    nrm = _norm_inf(dx)
    if nrm <= tol:
        return False
    v = dx / nrm
    if _norm_inf(P @ v) > tol:
        return False
    if float(q @ v) >= -tol:
        return False
    Av = A @ v if A.shape[0] else np.zeros(0)
    u_fin = np.isfinite(u)
    l_fin = np.isfinite(l)
    if np.any(u_fin & l_fin & (np.abs(Av) > tol)):
        return False
    if np.any(~u_fin & l_fin & (Av < -tol)):
        return False
    if np.any(u_fin & ~l_fin & (Av > tol)):
        return False
    return True


def _check_symmetric(P) -> None:
    gap = abs(P - P.T)
    if gap.nnz and gap.max() > 1e-10 * max(1.0, abs(P).max()):
        raise ValueError("invalid problem: P must be symmetric")


def _residuals_raw(P, q, A, l, u, x, y) -> dict:
    stat = _norm_inf(P @ x + q + A.T @ y)
    if A.shape[0]:
        ax = A @ x
        primal = _norm_inf(ax - np.clip(ax, l, u))
        dist = np.where(y > 0, np.abs(ax - u), np.abs(ax - l))
        dist = np.where(y == 0, 0.0, dist)
        # a multiplier pushing against an infinite bound is a sign violation;
        # charge it at problem scale instead of poisoning the metric with inf
        dist = np.where(np.isfinite(dist), dist, 1.0 + np.abs(ax))
        comp = _norm_inf(np.abs(y) * dist)
    else:
        primal = 0.0
        comp = 0.0
    return {"stationarity": stat, "primal": primal, "complementarity": comp}


def kkt_residuals(qp: "QpProblem", x: np.ndarray, y: np.ndarray) -> dict:
    """Stationarity, primal-violation, and complementarity residuals at (x, y).

    Complementarity pairs each multiplier with the distance of A_i x to the
    bound its sign designates (upper for y_i > 0, lower for y_i < 0).
    """
    return _residuals_raw(qp.P, qp.q, qp.A, qp.lower, qp.upper, x, y)


def _equality_solve(P, q, A, l, u, low_mask, up_mask, settings):
    """Solve the KKT system with the masked rows pinned at their bounds."""
    n = P.shape[0]
    m = A.shape[0]
    act = np.flatnonzero(low_mask | up_mask)
    b = np.where(low_mask, l, u)[act]
    Ared = A[act, :].tocsc() if act.size else sp.csc_matrix((0, n))
    k = act.size
    delta = settings.polish_delta
    kkt = sp.bmat(
        [
            [P + delta * sp.identity(n), Ared.T if k else None],
            [Ared if k else None, -delta * sp.identity(k) if k else None],
        ],
        format="csc",
    )
    kkt_exact = sp.bmat(
        [
            [P, Ared.T if k else None],
            [Ared if k else None, sp.csc_matrix((k, k)) if k else None],
        ],
        format="csc",
    )
    rhs = np.concatenate([-q, b])
    try:
        lu = spla.splu(kkt)
    except RuntimeError:
        return None
    t = lu.solve(rhs)
    for _ in range(settings.polish_refine_iters):
        t = t + lu.solve(rhs - kkt_exact @ t)
    if not np.all(np.isfinite(t)):
        return None
    xp = t[:n]
    yp = np.zeros(m)
    yp[act] = t[n:]
    return xp, yp


def _polish(P, q, A, l, u, x, y, settings):
    """Equality-constrained refinement on the detected active set.

    Tries two active-set guesses, multiplier signs alone and signs plus rows
    the iterate already sits on (degenerate optima carry zero multipliers on
    active rows), and returns the candidate with the smaller KKT merit.  The
    caller decides acceptance; None means no candidate could be computed.
    """
    m = A.shape[0]
    if m:
        # sign noise in y must not pin inactive rows: an inconsistent active
        # set yields a pseudo-stationary point with huge cancelling multipliers
        thr = 1e-10 * max(1.0, _norm_inf(y))
        ax = A @ x
        viol = _norm_inf(ax - np.clip(ax, l, u))
        near = 10.0 * max(viol, settings.eps_abs) * (1.0 + np.abs(ax))
        eq = np.isfinite(l) & np.isfinite(u) & (l == u)
        low_sign = ((y < -thr) | eq) & np.isfinite(l)
        up_sign = (y > thr) & ~low_sign & np.isfinite(u)
        near_low = np.isfinite(l) & (ax - l <= near)
        near_up = np.isfinite(u) & (u - ax <= near)
        low_wide = (low_sign | (near_low & (y <= thr))) & np.isfinite(l)
        up_wide = ((y > thr) | near_up) & ~low_wide & np.isfinite(u)
        guesses = [(low_sign, up_sign), (low_wide, up_wide)]
    else:
        z = np.zeros(0, dtype=bool)
        guesses = [(z, z)]

    best = None
    best_merit = np.inf
    for low_mask, up_mask in guesses:
        cand = _equality_solve(P, q, A, l, u, low_mask, up_mask, settings)
        if cand is None:
            continue
        merit = max(_residuals_raw(P, q, A, l, u, cand[0], cand[1]).values())
        if merit < best_merit:
            best, best_merit = cand, merit
    return best


def solve(qp: "QpProblem", settings: SolverSettings | None = None) -> Solution:
    """Solve a QP/LP in standard box-row form.

    Returns status "optimal" once the unscaled primal and dual residuals fall
    below eps_abs + eps_rel * scale, "primal_infeasible"/"dual_infeasible"
    when a certificate of infeasibility or unboundedness is detected, and
    "max_iter" with the best iterate otherwise.  Identical inputs and
    settings produce identical output (no randomness, fixed iteration order).
    """
    settings = settings or SolverSettings()
    settings.validate()
    P = qp.P.tocsc()
    A = qp.A.tocsc()
    q = np.asarray(qp.q, dtype=float)
    l = np.asarray(qp.lower, dtype=float)
    u = np.asarray(qp.upper, dtype=float)
    n, m = P.shape[0], A.shape[0]
    if q.shape != (n,) or A.shape[1] != n or l.shape != (m,) or u.shape != (m,):
        raise ValueError("invalid problem: inconsistent dimensions")
    if m and np.any(l > u):
        raise ValueError("invalid problem: lower > upper on some row")
    _check_symmetric(P)

    Ps, qs, As, d, e, c = _ruiz_equilibrate(P, q, A, settings.scaling_iters)
    ls, us = e * l, e * u
    eq_rows = np.isfinite(l) & np.isfinite(u) & (l == u)

    def factor(rho_bar):
        rho_vec = np.full(m, rho_bar)
        rho_vec[eq_rows] = min(rho_bar * settings.rho_eq_scale, settings.rho_max)
        kkt = Ps + settings.sigma * sp.identity(n, format="csc")
        if m:
            kkt = kkt + As.T @ sp.diags(rho_vec) @ As
        try:
            lu = spla.splu(kkt.tocsc(), permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise ValueError(f"invalid problem: cannot factor KKT system ({exc})")
        return rho_vec, lu

    rho_bar = settings.rho
    rho_vec, lu = factor(rho_bar)

    x = np.zeros(n)
    z = np.zeros(m)
    y = np.zeros(m)
    x_win = x.copy()
    y_win = y.copy()
    status = "max_iter"
    iterations = settings.max_iter
    last_adapt = 0
    num_adapts = 0

    def unscaled(xs, ys):
        xu = d * xs
        yu = (e * ys) / c if m else np.zeros(0)
        return xu, yu

    for it in range(1, settings.max_iter + 1):
        rhs = settings.sigma * x - qs
        if m:
            rhs = rhs + As.T @ (rho_vec * z - y)
        xt = lu.solve(rhs)
        x = settings.alpha * xt + (1.0 - settings.alpha) * x
        if m:
            zt = As @ xt
            zrel = settings.alpha * zt + (1.0 - settings.alpha) * z
            z_new = np.clip(zrel + y / rho_vec, ls, us)
            y = y + rho_vec * (zrel - z_new)
            z = z_new

        if it % settings.check_interval and it != settings.max_iter:
            continue
        if not np.all(np.isfinite(x)):
            raise ValueError("invalid problem: iterates diverged (is P positive semidefinite?)")

        xu, yu = unscaled(x, y)
        px = P @ xu
        aty = A.T @ yu if m else np.zeros(n)
        rd_vec = px + q + aty
        rd = _norm_inf(rd_vec)
        eps_dua = settings.eps_abs + settings.eps_rel * max(
            _norm_inf(px), _norm_inf(aty), _norm_inf(q)
        )
        if m:
            ax = A @ xu
            zu = z / e
            rp = _norm_inf(ax - zu)
            eps_pri = settings.eps_abs + settings.eps_rel * max(_norm_inf(ax), _norm_inf(zu))
            # bound violation is held to eps_abs absolutely, so the relative
            # slack on badly scaled rows cannot admit an infeasible point
            viol = _norm_inf(ax - np.clip(ax, l, u))
        else:
            rp, eps_pri, viol = 0.0, settings.eps_abs, 0.0
        if rp <= eps_pri and rd <= eps_dua and viol <= settings.eps_abs:
            status = "optimal"
            iterations = it
            break

        dxu = d * (x - x_win)
        dyu = (e * (y - y_win)) / c if m else np.zeros(0)
        x_win = x.copy()
        y_win = y.copy()
        if m and _is_primal_infeasible(A, l, u, dyu, settings.eps_infeas):
            status = "primal_infeasible"
            iterations = it
            break
        if _is_dual_infeasible(P, q, A, l, u, dxu, settings.eps_infeas):
            status = "dual_infeasible"
            iterations = it
            break

        if (
            settings.adaptive_rho
            and m
            and num_adapts < settings.adaptive_max_updates
            and it - last_adapt >= settings.adaptive_interval
            and rp + rd > 0
        ):
            num = rp / max(_norm_inf(ax), _norm_inf(zu), 1e-30)
            den = rd / max(_norm_inf(px), _norm_inf(aty), _norm_inf(q), 1e-30)
            # a vanishing residual on one side still drives rho to its limit
            factor_sq = max(num, 1e-30) / max(den, 1e-30)
            new_bar = float(np.clip(rho_bar * np.sqrt(factor_sq), settings.rho_min, settings.rho_max))
            if new_bar > settings.adaptive_threshold * rho_bar or new_bar < rho_bar / settings.adaptive_threshold:
                rho_bar = new_bar
                rho_vec, lu = factor(rho_bar)
                last_adapt = it
                num_adapts += 1

    xu, yu = unscaled(x, y)

    if settings.polish and status in ("optimal", "max_iter"):
        polished = _polish(P, q, A, l, u, xu, yu, settings)
        if polished is not None:
            merit_old = max(kkt_residuals(qp, xu, yu).values())
            merit_new = max(kkt_residuals(qp, *polished).values())
            obj_old = float(0.5 * xu @ (P @ xu) + q @ xu)
            obj_new = float(0.5 * polished[0] @ (P @ polished[0]) + q @ polished[0])
            # an over-pinned active set must not pass as optimal just because
            # it is feasible and stationary on the wrong face
            drift_ok = abs(obj_new - obj_old) <= 1e3 * (merit_old + settings.eps_abs) * (
                1.0 + abs(obj_old)
            )
            if merit_new <= merit_old and drift_ok:
                xu, yu = polished

    res = kkt_residuals(qp, xu, yu)
    if status == "max_iter":
        # the polished point may satisfy the full optimality contract even
        # when the splitting iteration itself stalled short of it
        scale = max(
            _norm_inf(P @ xu), _norm_inf(A.T @ yu) if m else 0.0, _norm_inf(q)
        )
        if (
            res["primal"] <= settings.eps_abs
            and res["stationarity"] <= settings.eps_abs + settings.eps_rel * scale
            and res["complementarity"] <= 10.0 * settings.eps_abs
        ):
            status = "optimal"
    objective = float(0.5 * xu @ (P @ xu) + q @ xu)
    return Solution(
        x=xu,
        objective=objective,
        status=status,
        iterations=iterations,
        primal_residual=res["primal"],
        dual_residual=res["stationarity"],
        y=yu,
    )


ORACLE_MAX_VARS = 10
ORACLE_MAX_ROWS = 12


def _oracle_feasible(A, l, u) -> bool:
    """Phase-1 feasibility of {l <= Ax <= u} via an LP (independent of solve)."""
    from scipy.optimize import linprog

    m, n = A.shape
    if m == 0:
        return True
    rows = []
    rhs = []
    for i in range(m):
        if np.isfinite(u[i]):
            rows.append(A[i])
            rhs.append(u[i])
        if np.isfinite(l[i]):
            rows.append(-A[i])
            rhs.append(-l[i])
    if not rows:
        return True
    res = linprog(
        np.zeros(n),
        A_ub=np.vstack(rows),
        b_ub=np.asarray(rhs),
        bounds=[(None, None)] * n,
        method="highs",
    )
    return res.status != 2


def oracle_solve(qp: "QpProblem") -> Solution:
    """Exhaustive active-set enumeration for tiny problems; exact ground truth.

    Every subset of rows (each pinned at its lower or upper bound) is solved
    as a dense equality-constrained KKT system; primal-feasible candidates
    with sign-correct multipliers are kept and the best one returned.
    """
    P = np.asarray(qp.P.todense(), dtype=float)
    A = np.asarray(qp.A.todense(), dtype=float)
    q = np.asarray(qp.q, dtype=float)
    l = np.asarray(qp.lower, dtype=float)
    u = np.asarray(qp.upper, dtype=float)
    n, m = P.shape[0], A.shape[0]
    if n > ORACLE_MAX_VARS or m > ORACLE_MAX_ROWS:
        raise ValueError(
            f"oracle too large: supports n <= {ORACLE_MAX_VARS}, m <= {ORACLE_MAX_ROWS}"
        )

    if not _oracle_feasible(A, l, u):
        return Solution(
            x=np.zeros(n), objective=0.0, status="primal_infeasible",
            iterations=0, primal_residual=np.inf, dual_residual=np.inf,
            y=np.zeros(m),
        )

    eq_rows = [i for i in range(m) if np.isfinite(l[i]) and l[i] == u[i]]
    free_rows = [i for i in range(m) if i not in eq_rows]
    scale = max(1.0, np.abs(q).max(initial=0.0), np.abs(P).max(initial=0.0))
    feas_tol = 1e-8 * max(1.0, np.abs(l[np.isfinite(l)]).max(initial=0.0),
                          np.abs(u[np.isfinite(u)]).max(initial=0.0))
    best = None
    tried = 0
    # an optimal basic solution pins at most n linearly independent rows
    for k in range(0, min(len(free_rows), n) + 1):
        for subset in itertools.combinations(free_rows, k):
            for signs in itertools.product((0, 1), repeat=k):
                rows = list(eq_rows) + list(subset)
                b = [l[i] for i in eq_rows]
                ok = True
                for i, s in zip(subset, signs):
                    bound = l[i] if s == 0 else u[i]
                    if not np.isfinite(bound):
                        ok = False
                        break
                    b.append(bound)
                if not ok:
                    continue
                tried += 1
                ka = len(rows)
                kkt = np.zeros((n + ka, n + ka))
                kkt[:n, :n] = P
                if ka:
                    Ar = A[rows]
                    kkt[:n, n:] = Ar.T
                    kkt[n:, :n] = Ar
                rhs = np.concatenate([-q, np.asarray(b)])
                t, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
                if np.abs(kkt @ t - rhs).max(initial=0.0) > 1e-9 * (1.0 + np.abs(rhs).max(initial=0.0)) * scale:
                    continue
                x = t[:n]
                lam = t[n:]
                ax = A @ x if m else np.zeros(0)
                if m and (np.any(ax < l - feas_tol) or np.any(ax > u + feas_tol)):
                    continue
                sign_ok = True
                for j, (i, s) in enumerate(zip(subset, signs), start=len(eq_rows)):
                    if s == 0 and lam[j] > 1e-9 * scale:
                        sign_ok = False
                        break
                    if s == 1 and lam[j] < -1e-9 * scale:
                        sign_ok = False
                        break
                if not sign_ok:
                    continue
                obj = float(0.5 * x @ (P @ x) + q @ x)
                if best is None or obj < best[0] - 1e-12:
                    y = np.zeros(m)
                    for j, i in enumerate(rows):
                        y[i] += lam[j]
                    best = (obj, x.copy(), y)

    if best is None:
        return Solution(
            x=np.zeros(n), objective=-np.inf, status="dual_infeasible",
            iterations=tried, primal_residual=0.0, dual_residual=np.inf,
            y=np.zeros(m),
        )
    obj, x, y = best
    res = kkt_residuals(qp, x, y)
    return Solution(
        x=x, objective=obj, status="optimal", iterations=tried,
        primal_residual=res["primal"], dual_residual=res["stationarity"], y=y,
    )
