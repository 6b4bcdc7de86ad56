import json

import numpy as np
import pytest
import scipy.sparse as sp

from convexcone import QpProblem, SolverSettings, kkt_residuals, oracle_solve, solve


def make_qp(P, q, A, l, u):
    q = np.asarray(q, dtype=float)
    n = q.size
    A = np.asarray(A, dtype=float).reshape(-1, n)
    return QpProblem(
        sp.csc_matrix(np.asarray(P, dtype=float).reshape(n, n)),
        q,
        sp.csc_matrix(A),
        np.asarray(l, dtype=float),
        np.asarray(u, dtype=float),
        {"u": range(0, n)},
    )


def random_box_qp(rng, lp=False):
    n, m = 5, 6
    if lp:
        P = np.zeros((n, n))
        A = np.vstack([np.eye(n), rng.normal(size=(1, n))])
        l = np.concatenate([-np.ones(n), [-1.0]])
        u = np.concatenate([np.ones(n), [1.0]])
    else:
        M = rng.normal(size=(n, n))
        P = M.T @ M + 0.1 * np.eye(n)
        A = rng.normal(size=(m, n))
        x0 = rng.normal(size=n)
        l = A @ x0 - rng.uniform(0.1, 1.0, m)
        u = A @ x0 + rng.uniform(0.1, 1.0, m)
    return make_qp(P, rng.normal(size=n), A, l, u)


class TestHandExamples:
    def test_halfspace_quadratic(self, assert_kkt):
        qp = make_qp([[1.0]], [0.0], [[1.0]], [1.0], [np.inf])
        sol = solve(qp)
        assert_kkt(qp, sol)
        assert sol.x[0] == pytest.approx(1.0, abs=1e-8)
        assert sol.objective == pytest.approx(0.5, abs=1e-8)
        orc = oracle_solve(qp)
        assert orc.objective == pytest.approx(sol.objective, abs=1e-9)

    def test_unconstrained_diagonal(self, assert_kkt):
        qp = QpProblem(
            sp.identity(2, format="csc"), np.array([-1.0, -2.0]),
            sp.csc_matrix((0, 2)), np.zeros(0), np.zeros(0), {"u": range(0, 2)},
        )
        sol = solve(qp)
        assert_kkt(qp, sol)
        assert np.allclose(sol.x, [1.0, 2.0], atol=1e-9)
        assert oracle_solve(qp).objective == pytest.approx(sol.objective, abs=1e-9)

    def test_lp_vertex(self, assert_kkt):
        qp = make_qp(
            np.zeros((2, 2)), [-1.0, -1.0],
            [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            [0.0, 0.0, -np.inf], [2.0, 3.0, 4.0],
        )
        sol = solve(qp)
        assert_kkt(qp, sol)
        assert sol.objective == pytest.approx(-4.0, abs=1e-8)
        assert oracle_solve(qp).objective == pytest.approx(-4.0, abs=1e-9)


class TestStatuses:
    def test_primal_infeasible_both_paths(self):
        qp = make_qp([[0.0]], [0.0], [[1.0], [1.0]], [1.0, -np.inf], [np.inf, 0.0])
        assert solve(qp).status == "primal_infeasible"
        assert oracle_solve(qp).status == "primal_infeasible"

    def test_dual_infeasible_both_paths(self):
        qp = make_qp([[0.0]], [-1.0], [[1.0]], [0.0], [np.inf])
        assert solve(qp).status == "dual_infeasible"
        assert oracle_solve(qp).status == "dual_infeasible"

    def test_max_iter_status(self):
        rng = np.random.default_rng(0)
        qp = random_box_qp(rng)
        sol = solve(qp, SolverSettings(max_iter=2, check_interval=1))
        assert sol.status == "max_iter"
        assert sol.iterations == 2

    def test_objective_always_evaluated_at_x(self):
        rng = np.random.default_rng(1)
        qp = random_box_qp(rng)
        sol = solve(qp, SolverSettings(max_iter=2, check_interval=1))
        assert sol.objective == pytest.approx(qp.objective_value(sol.x), abs=1e-12)


class TestOracleEquivalence:
    def test_random_qps(self, assert_kkt):
        rng = np.random.default_rng(42)
        for _ in range(10):
            qp = random_box_qp(rng)
            sol = solve(qp)
            orc = oracle_solve(qp)
            assert_kkt(qp, sol)
            assert abs(sol.objective - orc.objective) < 1e-6

    def test_random_lps(self, assert_kkt):
        rng = np.random.default_rng(43)
        for _ in range(10):
            qp = random_box_qp(rng, lp=True)
            sol = solve(qp)
            orc = oracle_solve(qp)
            assert_kkt(qp, sol)
            assert abs(sol.objective - orc.objective) < 1e-6

    def test_oracle_size_guard(self):
        qp = make_qp(np.eye(11), np.zeros(11), np.zeros((1, 11)), [-1.0], [1.0])
        with pytest.raises(ValueError, match="oracle too large"):
            oracle_solve(qp)


class TestContracts:
    def test_determinism(self):
        rng = np.random.default_rng(7)
        qp = random_box_qp(rng)
        s1 = solve(qp)
        s2 = solve(qp)
        assert np.array_equal(s1.x, s2.x)
        assert np.array_equal(s1.y, s2.y)
        assert s1.iterations == s2.iterations

    def test_argmin_invariant_under_cost_scaling(self):
        rng = np.random.default_rng(8)
        qp = random_box_qp(rng)
        scaled = QpProblem(
            (3.7 * qp.P).tocsc(), 3.7 * qp.q, qp.A, qp.lower, qp.upper, qp.var_index
        )
        x1 = solve(qp).x
        x2 = solve(scaled).x
        assert np.abs(x1 - x2).max() < 10 * 1e-6

    def test_polish_tightens_residuals(self):
        rng = np.random.default_rng(9)
        qp = random_box_qp(rng)
        rough = solve(qp, SolverSettings(polish=False))
        tight = solve(qp, SolverSettings(polish=True))
        r_rough = kkt_residuals(qp, rough.x, rough.y)
        r_tight = kkt_residuals(qp, tight.x, tight.y)
        assert max(r_tight.values()) <= max(r_rough.values())
        assert r_tight["stationarity"] < 1e-9

    def test_settings_validated(self):
        with pytest.raises(ValueError):
            solve(make_qp([[1.0]], [0.0], [[1.0]], [0.0], [1.0]), SolverSettings(eps_abs=0.0))
        with pytest.raises(ValueError):
            solve(make_qp([[1.0]], [0.0], [[1.0]], [0.0], [1.0]), SolverSettings(max_iter=0))

    def test_asymmetric_p_rejected_at_construction(self):
        with pytest.raises(ValueError, match="symmetric"):
            make_qp([[1.0, 0.5], [0.0, 1.0]], [0.0, 0.0], np.zeros((0, 2)), [], [])

    def test_solution_json(self, tmp_path):
        qp = make_qp([[1.0]], [0.0], [[1.0]], [1.0], [np.inf])
        sol = solve(qp)
        p = tmp_path / "sol.json"
        sol.to_json(p)
        doc = json.loads(p.read_text())
        assert set(doc) == {
            "status", "objective", "iterations", "primal_residual", "dual_residual", "x",
        }
        assert doc["status"] == "optimal"
        assert doc["x"][0] == pytest.approx(1.0, abs=1e-8)
