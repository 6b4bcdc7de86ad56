import math

import hypothesis
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from convexcone import (
    STEP1D_A_STAR,
    VARIANT_VALUE,
    Grid,
    RotatedQuadratic,
    StencilSet,
    Step1DSolution,
    VariantSolution,
    certify,
    lower_convex_hull_1d,
    rotated_quadratic,
    sample,
    step1d_objective,
    step1d_value,
    variant_value,
)


def step1d_energy_numeric(c, a):
    """Independent oracle: numerical quadrature of the energy of the candidate."""
    sol = Step1DSolution(c, a)

    def du(x):
        return sol.m if x <= a else c * (2 * x - sol.b - 1) / 2

    def f(x):
        return -c if x < 0 else (c if x > 0 else 0.0)

    def integrand(x):
        return 0.5 * du(x) ** 2 + f(x) * sol.value(x)

    cuts = sorted({-1.0, min(a, 0.0), max(a, 0.0), 1.0})
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        val, _ = quad(integrand, lo, hi, limit=200)
        total += val
    return total


class TestStep1D:
    def test_boundary_values(self):
        assert step1d_value(1.0, 0.3, -1.0) == 0.0
        assert step1d_value(1.0, 0.3, 1.0) == 0.0

    def test_continuity_and_slope_match_at_kink(self):
        sol = Step1DSolution(1.0, 0.3)
        left = sol.m * (sol.a + 1.0)
        right = 1.0 * (sol.a - sol.b) * (sol.a - 1.0) / 2.0
        assert left == pytest.approx(right, abs=1e-14)
        dleft = sol.m
        dright = (2 * sol.a - sol.b - 1.0) / 2.0
        assert dleft == pytest.approx(dright, abs=1e-14)

    @pytest.mark.parametrize("c,a", [(1.0, 0.3), (1.0, STEP1D_A_STAR), (2.0, 0.7), (0.5, 0.0)])
    def test_objective_matches_numeric_quadrature(self, c, a):
        assert step1d_objective(c, a) == pytest.approx(step1d_energy_numeric(c, a), abs=1e-9)

    @pytest.mark.parametrize("c,a", [(1.0, -0.3), (2.0, -0.2)])
    def test_closed_form_discrepancy_left_of_jump(self, c, a):
        # with the kink left of the source jump, the quadratic piece straddles
        # the sign change and the closed form is off by exactly a^3 c^2 / 3
        gap = step1d_objective(c, a) - step1d_energy_numeric(c, a)
        assert gap == pytest.approx(-(a**3) * c**2 / 3.0, abs=1e-9)

    def test_value_at_optimum(self):
        assert step1d_objective(1.0, STEP1D_A_STAR) == pytest.approx(-0.026143, abs=1e-6)

    def test_optimum_is_stationary(self):
        eps = 1e-6
        d = (
            step1d_objective(1.0, STEP1D_A_STAR + eps)
            - step1d_objective(1.0, STEP1D_A_STAR - eps)
        ) / (2 * eps)
        assert abs(d) < 1e-8

    def test_optimum_beats_sampled_family(self):
        best = step1d_objective(1.0, STEP1D_A_STAR)
        for a in np.linspace(-0.999, 0.999, 200):
            assert best <= step1d_objective(1.0, a) + 1e-12

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            step1d_value(1.0, 2.0, 0.0)
        with pytest.raises(ValueError):
            step1d_value(1.0, 0.0, 1.5)
        with pytest.raises(ValueError):
            Step1DSolution(-1.0, 0.0)


class TestVariant:
    def test_corner_values(self):
        assert variant_value(0.0, 0.0) == 0.0
        assert variant_value(1.0, 1.0) == pytest.approx((2.0 + math.sqrt(2.0)) / 3.0)

    def test_constants(self):
        v = VariantSolution()
        assert v.a == pytest.approx(2.0 / 3.0)
        assert v.b == pytest.approx((4.0 - math.sqrt(2.0)) / 3.0)
        assert v.value == pytest.approx(VARIANT_VALUE)

    def test_samples_are_convex_at_width4(self):
        # second differences of the max-affine samples are >= 0 up to the
        # 1/h^2-amplified rounding of the sampled values
        grid = Grid.square(0.0, 1.0, 64)
        u = sample(grid, variant_value)
        rep = certify(u, StencilSet.make(4), tolerance=1e-9)
        assert rep.feasible

    def test_gradient_box_and_anchor(self):
        grid = Grid.square(0.0, 1.0, 40)
        u = sample(grid, variant_value)
        v = u.values.reshape(40, 40)
        h = grid.h
        for diffs in (np.diff(v, axis=1) / h, np.diff(v, axis=0) / h):
            assert diffs.min() >= -1e-12 and diffs.max() <= 1.0 + 1e-12
        assert u.values[0] == 0.0

    def test_value_by_independent_region_integration(self):
        # high-resolution midpoint quadrature of grad u . x - u using the
        # exact region-wise gradients
        n = 2000
        t = (np.arange(n) + 0.5) / n
        X, Y = np.meshgrid(t, t)
        a, b = VariantSolution().a, VariantSolution().b
        U = np.maximum.reduce([np.zeros_like(X), X - a, Y - a, X + Y - b])
        gx = np.select([U == 0, U == X - a, U == Y - a], [0.0, 1.0, 0.0], default=1.0)
        gy = np.select([U == 0, U == X - a, U == Y - a], [0.0, 0.0, 1.0], default=1.0)
        val = (gx * X + gy * Y - U).mean()
        assert val == pytest.approx(VARIANT_VALUE, abs=1e-3)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            variant_value(1.5, 0.0)


def brute_hull(points):
    """O(n^3) oracle: hull value at x_k is the smallest spanning-chord value."""
    xs = [p[0] for p in points]
    vs = [p[1] for p in points]
    out = []
    for k, xk in enumerate(xs):
        best = vs[k]
        for i in range(len(xs)):
            for j in range(i + 1, len(xs)):
                if xs[i] <= xk <= xs[j]:
                    t = (xk - xs[i]) / (xs[j] - xs[i])
                    best = min(best, (1 - t) * vs[i] + t * vs[j])
        out.append(best)
    return np.asarray(out)


class TestLowerConvexHull:
    def test_convex_input_unchanged(self):
        xs = np.linspace(-1, 1, 9)
        pts = list(zip(xs, xs**2))
        assert np.allclose(lower_convex_hull_1d(pts), xs**2, atol=1e-14)

    def test_concave_input_gives_chord(self):
        xs = np.linspace(0, 1, 11)
        pts = list(zip(xs, -(xs**2)))
        assert np.allclose(lower_convex_hull_1d(pts), -xs, atol=1e-14)

    def test_sine_matches_brute_force(self):
        xs = np.linspace(-1, 1, 11)
        pts = list(zip(xs, np.sin(np.pi * xs)))
        assert np.allclose(lower_convex_hull_1d(pts), brute_hull(pts), atol=1e-12)

    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=12))
    def test_below_input_and_node_convex(self, vals):
        xs = np.arange(len(vals), dtype=float)
        hull = lower_convex_hull_1d(list(zip(xs, vals)))
        assert np.all(hull <= np.asarray(vals) + 1e-12)
        if len(vals) >= 3:
            second = hull[:-2] + hull[2:] - 2 * hull[1:-1]
            assert second.min() >= -1e-9

    def test_duplicate_abscissae_rejected(self):
        with pytest.raises(ValueError):
            lower_convex_hull_1d([(0.0, 1.0), (0.0, 2.0), (1.0, 0.0)])


class TestRotatedQuadratic:
    def test_reduces_at_zero_angle(self):
        for x, y in [(0.3, -0.7), (1.0, 2.0)]:
            assert rotated_quadratic(-0.5, 0.0, x, y) == pytest.approx(
                (x * x - 0.5 * y * y) / 2.0
            )

    def test_isotropic_independent_of_angle(self):
        for theta in (0.0, 0.3, 1.1):
            assert rotated_quadratic(1.0, theta, 0.4, -0.2) == pytest.approx(
                (0.4**2 + 0.2**2) / 2.0
            )

    def test_hessian_eigenvalues_example(self):
        eig = np.linalg.eigvalsh(RotatedQuadratic(-0.5, math.pi / 8).hessian())
        assert eig[0] == pytest.approx(-0.5, abs=1e-12)
        assert eig[1] == pytest.approx(1.0, abs=1e-12)

    @hypothesis.settings(max_examples=100)
    @given(st.floats(-2.0, 0.99), st.floats(0.0, math.pi))
    def test_hessian_eigenvalues_random(self, alpha, theta):
        eig = np.linalg.eigvalsh(RotatedQuadratic(alpha, theta).hessian())
        assert eig[0] == pytest.approx(min(alpha, 1.0), abs=1e-9)
        assert eig[1] == pytest.approx(max(alpha, 1.0), abs=1e-9)

    def test_eigenvector_angles(self):
        # the unit eigenvalue's eigenvector sits at angle theta, the alpha
        # eigenvector at theta + pi/2 (the formula rotates (x^2 + a y^2)/2)
        rq = RotatedQuadratic(-0.3, 0.4)
        w, v = np.linalg.eigh(rq.hessian())
        ang_small = math.atan2(v[1, 0], v[0, 0]) % math.pi
        ang_big = math.atan2(v[1, 1], v[0, 1]) % math.pi
        assert w[0] == pytest.approx(-0.3) and w[1] == pytest.approx(1.0)
        assert ang_small == pytest.approx(0.4 + math.pi / 2, abs=1e-12)
        assert ang_big == pytest.approx(0.4, abs=1e-12)
