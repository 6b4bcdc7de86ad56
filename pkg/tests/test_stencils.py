import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from convexcone import (
    Direction,
    StencilSet,
    convexity_threshold,
    directional_resolution,
    directions,
)

TABLE = {
    # width: (dtheta, tan^2 dtheta) as tabulated to two figures
    1: (0.39, 0.17),
    2: (0.23, 0.056),
    3: (0.16, 0.026),
    4: (0.12, 0.015),
}


class TestDirectionSets:
    def test_width1_set(self):
        got = {d.as_tuple() for d in directions(1)}
        assert got == {(1, 0), (0, 1), (1, 1), (1, -1)}

    def test_width2_adds_four(self):
        got = {d.as_tuple() for d in directions(2)}
        added = got - {d.as_tuple() for d in directions(1)}
        assert added == {(2, 1), (1, 2), (2, -1), (1, -2)}

    def test_width3_adds_eight(self):
        got = {d.as_tuple() for d in directions(3)}
        added = got - {d.as_tuple() for d in directions(2)}
        assert added == {(1, 3), (3, 1), (2, 3), (3, 2), (1, -3), (3, -1), (2, -3), (3, -2)}

    @pytest.mark.parametrize("w", [1, 2, 3])
    def test_cumulative(self, w):
        assert {d.as_tuple() for d in directions(w)} <= {
            d.as_tuple() for d in directions(w + 1)
        }

    @given(st.integers(1, 6))
    def test_coprime_and_canonical(self, w):
        for d in directions(w):
            assert math.gcd(abs(d.p), abs(d.q)) == 1
            assert max(abs(d.p), abs(d.q)) <= w
            assert d.p > 0 or (d.p == 0 and d.q > 0)
        tuples = [d.as_tuple() for d in directions(w)]
        assert len(tuples) == len(set(tuples))
        assert (2, 2) not in tuples and (3, 3) not in tuples

    def test_one_dimensional(self):
        assert [d.as_tuple() for d in directions(3, dim=1)] == [(1,)]

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            directions(0)
        with pytest.raises(ValueError):
            directions(1, dim=3)


class TestDirectionValidation:
    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            Direction(0, 0)

    def test_rejects_non_coprime(self):
        with pytest.raises(ValueError):
            Direction(2, 2)

    def test_rejects_non_canonical(self):
        with pytest.raises(ValueError):
            Direction(-1, 1)
        with pytest.raises(ValueError):
            Direction(0, -1)

    def test_1d_scalar_one(self):
        d = Direction(1)
        assert d.dim == 1 and d.euclidean_norm == 1.0
        with pytest.raises(ValueError):
            Direction(2)

    def test_norm(self):
        assert Direction(3, -4).euclidean_norm == pytest.approx(5.0)


class TestDirectionalResolution:
    @pytest.mark.parametrize("w", [1, 2, 3, 4])
    def test_closed_form(self, w):
        dt = directional_resolution(directions(w))
        assert dt == pytest.approx(math.atan(1.0 / w) / 2.0, abs=1e-12)

    @pytest.mark.parametrize("w", [1, 2, 3, 4])
    def test_tabulated_values(self, w):
        s = StencilSet.make(w)
        dt_ref, t2_ref = TABLE[w]
        assert abs(s.dtheta - dt_ref) <= 0.005
        assert abs(s.tan2_dtheta - t2_ref) <= 0.003

    def test_axes_only(self):
        dt = directional_resolution([Direction(1, 0), Direction(0, 1)])
        assert dt == pytest.approx(math.pi / 4, abs=1e-14)

    def test_single_direction(self):
        assert directional_resolution([Direction(1, 0)]) == pytest.approx(math.pi / 2)

    def test_one_dimensional_is_zero(self):
        assert directional_resolution([Direction(1)]) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            directional_resolution([])

    @given(st.integers(-5, 5), st.integers(-5, 5))
    def test_adding_a_direction_never_increases(self, p, q):
        base = list(directions(1))
        if (p, q) == (0, 0):
            return
        g = math.gcd(abs(p), abs(q))
        p, q = p // g, q // g
        if not (p > 0 or (p == 0 and q > 0)):
            p, q = -p, -q
        extra = Direction(p, q)
        bigger = base + [extra]
        assert directional_resolution(bigger) <= directional_resolution(base) + 1e-15


class TestConvexityThreshold:
    def test_width1(self):
        assert convexity_threshold(math.atan(1.0) / 2.0) == pytest.approx(
            0.17157287525381, abs=1e-10
        )

    def test_zero(self):
        assert convexity_threshold(0.0) == 0.0

    def test_width4(self):
        assert convexity_threshold(math.atan(0.25) / 2.0) == pytest.approx(0.015, abs=3e-4)

    def test_out_of_validity(self):
        with pytest.raises(ValueError, match="pi/4"):
            convexity_threshold(math.pi / 4 + 0.01)

    def test_boundary_allowed(self):
        assert convexity_threshold(math.pi / 4) == pytest.approx(1.0)


class TestStencilSet:
    def test_make(self):
        s = StencilSet.make(2)
        assert s.width == 2 and s.dim == 2 and len(s.directions) == 8
        assert s.tan2_dtheta == pytest.approx(math.tan(s.dtheta) ** 2)

    def test_from_directions(self):
        s = StencilSet.from_directions([Direction(1, 0), Direction(0, 1)])
        assert s.dtheta == pytest.approx(math.pi / 4)
        assert s.tan2_dtheta == pytest.approx(1.0)

    def test_from_directions_mixed_dim_rejected(self):
        with pytest.raises(ValueError):
            StencilSet.from_directions([Direction(1), Direction(1, 0)])

    def test_1d(self):
        s = StencilSet.make(3, dim=1)
        assert s.dtheta == 0.0 and s.tan2_dtheta == 0.0
