"""Closed-form reference solutions and brute-force oracles for verification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Optimal kink location for the 1d step-source problem.
STEP1D_A_STAR = math.sqrt(2.0) - 1.0

# Constants of the box-constrained linear-objective screening problem on [0,1]^2.
VARIANT_A = 2.0 / 3.0
VARIANT_B = (4.0 - math.sqrt(2.0)) / 3.0
VARIANT_VALUE = 2.0 / 27.0 * (6.0 + math.sqrt(2.0))


@dataclass(frozen=True)
class Step1DSolution:
    """One-parameter family of candidate minimizers for the 1d step problem.

    Each member is linear with slope m on [-1, a] and quadratic
    c (x - b)(x - 1)/2 on [a, 1]; m and b are chosen so the two pieces match
    in value and slope at x = a and vanish at x = +-1.
    """

    c: float
    a: float

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError(f"step coefficient must be positive, got {self.c}")
        if not -1.0 <= self.a <= 1.0:
            raise ValueError(f"kink location must lie in [-1, 1], got {self.a}")

    @property
    def m(self) -> float:
        return -self.c * (self.a - 1.0) ** 2 / 4.0

    @property
    def b(self) -> float:
        return (self.a**2 + 2.0 * self.a - 1.0) / 2.0

    def value(self, x: float) -> float:
        if not -1.0 <= x <= 1.0:
            raise ValueError(f"x = {x} outside [-1, 1]")
        if x <= self.a:
            return self.m * (x + 1.0)
        return self.c * (x - self.b) * (x - 1.0) / 2.0

    def objective(self) -> float:
        a, c = self.a, self.c
        return -(1.0 / 48.0) * c**2 * (a - 1.0) ** 2 * (3.0 * a**2 + 10.0 * a - 1.0)


def step1d_value(c: float, a: float, x: float) -> float:
    """Value at x of the candidate minimizer with kink at a."""
    return Step1DSolution(c, a).value(x)


def step1d_objective(c: float, a: float) -> float:
    """Energy of the candidate with kink at a (closed form)."""
    return Step1DSolution(c, a).objective()


@dataclass(frozen=True)
class VariantSolution:
    """Exact max-affine solution of the box-constrained screening problem."""

    a: float = VARIANT_A
    b: float = VARIANT_B
    value: float = VARIANT_VALUE


def variant_value(x: float, y: float) -> float:
    """Pointwise value max(0, x - a, y - a, x + y - b) on [0, 1]^2."""
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError(f"({x}, {y}) outside [0, 1]^2")
    return max(0.0, x - VARIANT_A, y - VARIANT_A, x + y - VARIANT_B)


@dataclass(frozen=True)
class RotatedQuadratic:
    """Quadratic with Hessian eigenvalues (alpha, 1), eigenvectors at angle theta."""

    alpha: float
    theta: float

    @property
    def coeff_xx(self) -> float:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (c * c + self.alpha * s * s) / 2.0

    @property
    def coeff_xy(self) -> float:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (1.0 - self.alpha) * c * s

    @property
    def coeff_yy(self) -> float:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (self.alpha * c * c + s * s) / 2.0

    def __call__(self, x: float, y: float) -> float:
        return self.coeff_xx * x * x + self.coeff_xy * x * y + self.coeff_yy * y * y

    def hessian(self) -> np.ndarray:
        return np.array(
            [[2.0 * self.coeff_xx, self.coeff_xy], [self.coeff_xy, 2.0 * self.coeff_yy]]
        )


def rotated_quadratic(alpha: float, theta: float, x: float, y: float) -> float:
    """Evaluate the three-coefficient rotated quadratic at (x, y)."""
    return RotatedQuadratic(alpha, theta)(x, y)


def lower_convex_hull_1d(points: Sequence[tuple[float, float]]) -> np.ndarray:
    """Values at the input abscissae of the lower convex hull of the points.

    Monotone-chain construction of the lower hull followed by piecewise-linear
    interpolation.  This is the exact largest node-convex minorant of the
    samples, hence the minimizer of any positively-weighted envelope fit.
    Requires strictly increasing x.
    """
    pts = [(float(x), float(v)) for x, v in points]
    if len(pts) < 2:
        raise ValueError("hull needs at least two points")
    xs = np.array([p[0] for p in pts])
    if np.any(np.diff(xs) <= 0):
        raise ValueError("hull abscissae must be strictly increasing (no duplicates)")
    hull: list[tuple[float, float]] = []
    for p in pts:
        while len(hull) >= 2:
            (x0, v0), (x1, v1) = hull[-2], hull[-1]
            # pop hull[-1] if it lies on or above the chord hull[-2] -> p
            if (x1 - x0) * (p[1] - v0) - (p[0] - x0) * (v1 - v0) <= 0.0:
                hull.pop()
            else:
                break
        hull.append(p)
    hx = np.array([p[0] for p in hull])
    hv = np.array([p[1] for p in hull])
    return np.interp(xs, hx, hv)
