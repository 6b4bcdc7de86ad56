"""Integer direction stencils and their angular resolution.

A width-w stencil consists of every coprime integer vector (p, q) with
max(|p|, |q|) <= w, with v and -v identified (the symmetric second difference
along them is the same), canonicalized to p > 0 or (p, q) = (0, 1).  The
directional resolution dtheta is the largest angle between an arbitrary unit
vector and the nearest stencil line; in 2d it equals half the largest angular
gap between consecutive direction lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class Direction:
    """A single stencil direction: integer (p, q) in 2d, the scalar 1 in 1d."""

    p: int
    q: int | None = None

    def __post_init__(self):
        if self.q is None:
            if self.p != 1:
                raise ValueError("the only 1d direction is 1")
            return
        p, q = int(self.p), int(self.q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        if (p, q) == (0, 0):
            raise ValueError("direction must be nonzero")
        if math.gcd(abs(p), abs(q)) != 1:
            raise ValueError(f"direction ({p}, {q}) is not coprime")
        if not (p > 0 or (p == 0 and q > 0)):
            raise ValueError(f"direction ({p}, {q}) is not canonical (want p > 0, or (0, 1))")

    @property
    def dim(self) -> int:
        return 1 if self.q is None else 2

    @property
    def euclidean_norm(self) -> float:
        return 1.0 if self.q is None else math.hypot(self.p, self.q)

    def line_angle(self) -> float:
        """Angle of the direction line in [0, pi).  2d only."""
        if self.q is None:
            raise ValueError("line angle is undefined in 1d")
        ang = math.atan2(self.q, self.p)
        return ang + math.pi if ang < 0 else ang

    def as_tuple(self) -> tuple[int, ...]:
        return (self.p,) if self.q is None else (self.p, self.q)


def directions(width: int, dim: int = 2) -> tuple[Direction, ...]:
    """All canonical coprime directions of the given stencil width.

    The sets are cumulative: directions(w) is a subset of directions(w + 1).
    In 1d the single direction 1 is returned for every width.
    """
    if width < 1:
        raise ValueError(f"stencil width must be >= 1, got {width}")
    if dim == 1:
        return (Direction(1),)
    if dim != 2:
        raise ValueError(f"unsupported dimension {dim}")
    out = [Direction(0, 1)]
    for p in range(1, width + 1):
        for q in range(-width, width + 1):
            if math.gcd(p, abs(q)) == 1:
                out.append(Direction(p, q))
    out.sort(key=lambda d: (max(abs(d.p), abs(d.q)), d.line_angle()))
    return tuple(out)


def directional_resolution(dirs: Sequence[Direction]) -> float:
    """Largest angle from any unit vector to the nearest direction line.

    Computed exactly in 2d as half the maximum angular gap between
    consecutive direction lines sorted modulo pi.  Returns 0 in 1d.
    """
    dirs = tuple(dirs)
    if not dirs:
        raise ValueError("directional resolution needs at least one direction")
    if any(d.dim == 1 for d in dirs):
        return 0.0
    angles = sorted(d.line_angle() for d in dirs)
    gaps = [b - a for a, b in zip(angles, angles[1:])]
    gaps.append(angles[0] + math.pi - angles[-1])
    return max(gaps) / 2.0


def convexity_threshold(dtheta: float) -> float:
    """tan^2(dtheta): the eigenvalue-ratio bound tied to a stencil's resolution.

    A grid function whose directional second differences are all nonnegative
    has Hessian eigenvalue ratio lambda_min/lambda_max >= -tan^2(dtheta)
    wherever a quadratic model is exact; the same factor multiplies the
    maximum second difference in the uniformly-convex (inner) constraint.
    Only valid for dtheta <= pi/4.
    """
    if not (0.0 <= dtheta <= math.pi / 4 + 1e-12):
        raise ValueError(
            f"convexity threshold requires 0 <= dtheta <= pi/4, got {dtheta}"
        )
    return math.tan(dtheta) ** 2


@dataclass(frozen=True)
class StencilSet:
    """A direction set together with its angular resolution."""

    width: int
    dim: int
    directions: tuple[Direction, ...]
    dtheta: float
    tan2_dtheta: float

    @classmethod
    def make(cls, width: int, dim: int = 2) -> "StencilSet":
        dirs = directions(width, dim)
        dt = directional_resolution(dirs)
        return cls(width, dim, dirs, dt, math.tan(dt) ** 2)

    @classmethod
    def from_directions(cls, dirs: Iterable[Direction]) -> "StencilSet":
        dirs = tuple(dirs)
        if not dirs:
            raise ValueError("stencil needs at least one direction")
        dim = dirs[0].dim
        if any(d.dim != dim for d in dirs):
            raise ValueError("mixed-dimension direction set")
        width = 1 if dim == 1 else max(max(abs(d.p), abs(d.q)) for d in dirs)
        dt = directional_resolution(dirs)
        return cls(width, dim, dirs, dt, math.tan(dt) ** 2)
