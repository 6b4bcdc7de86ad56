"""Variational problems with convexity constraints.

The cone of convex functions is approximated by a polyhedral cone of
directional second-difference inequalities on a uniform grid, reducing each
variational problem to a sparse QP/LP handled by the built-in
operator-splitting solver.  Closed-form references and brute-force oracles
back the test suite.
"""

from .analytic import (
    STEP1D_A_STAR,
    VARIANT_VALUE,
    RotatedQuadratic,
    Step1DSolution,
    VariantSolution,
    lower_convex_hull_1d,
    rotated_quadratic,
    step1d_objective,
    step1d_value,
    variant_value,
)
from .cone import (
    CertificateReport,
    ConeConstraints,
    certify,
    inner_cone_rows,
    second_difference_rows,
)
from .grids import (
    Grid,
    GridFunction,
    SparseMatrix,
    assemble_centered_dx,
    assemble_dxx_1d,
    assemble_grad_quad_1d,
    assemble_laplacian_2d,
    centered_gradient,
    gradient_energy,
    sample,
)
from .problems import (
    ProblemSpec,
    QpProblem,
    Quadrature,
    anchor,
    build,
    build_custom_1d,
    build_envelope,
    build_monopolist,
    build_monopolist_variant,
    build_projection,
    quadrature_weights,
    spec_from_json,
)
from .solver import Solution, SolverSettings, kkt_residuals, oracle_solve, solve
from .stencils import (
    Direction,
    StencilSet,
    convexity_threshold,
    directional_resolution,
    directions,
)

__all__ = [
    "STEP1D_A_STAR",
    "VARIANT_VALUE",
    "CertificateReport",
    "ConeConstraints",
    "Direction",
    "Grid",
    "GridFunction",
    "ProblemSpec",
    "QpProblem",
    "Quadrature",
    "RotatedQuadratic",
    "Solution",
    "SolverSettings",
    "SparseMatrix",
    "StencilSet",
    "Step1DSolution",
    "VariantSolution",
    "anchor",
    "assemble_centered_dx",
    "assemble_dxx_1d",
    "assemble_grad_quad_1d",
    "assemble_laplacian_2d",
    "build",
    "build_custom_1d",
    "build_envelope",
    "build_monopolist",
    "build_monopolist_variant",
    "build_projection",
    "centered_gradient",
    "certify",
    "convexity_threshold",
    "directional_resolution",
    "directions",
    "gradient_energy",
    "inner_cone_rows",
    "kkt_residuals",
    "lower_convex_hull_1d",
    "oracle_solve",
    "quadrature_weights",
    "rotated_quadratic",
    "sample",
    "second_difference_rows",
    "solve",
    "spec_from_json",
    "step1d_objective",
    "step1d_value",
    "variant_value",
]
