"""Stieltjes calculus driven by piecewise-monotone derivators with jumps.

The package models a left-continuous bounded-variation derivator g, the four
measures it induces (signed, positive part, negative part, total variation),
differentiation and integration with respect to g, the exponential of a
linear coefficient along g, and measure-driven initial value problems, with
a worked application to plume rise through density interfaces.
"""

from .calculus import (
    ChainRuleReport,
    FtcReport,
    Trajectory,
    chain_rule_check,
    derivative_estimates,
    ftc_roundtrip,
    g_continuity_modulus,
    g_derivative,
    g_derivative_fn,
    primitive,
    uniform_grid,
)
from .derivator import (
    CONSTANT,
    NEGATIVE,
    NONDECREASING,
    NONINCREASING,
    POSITIVE,
    TOTAL,
    ConstantProfile,
    Derivator,
    Jump,
    LinearProfile,
    PowerProfile,
    Segment,
    StructuralSets,
    TabulatedProfile,
)
from .errors import (
    ConvergenceError,
    DegenerateCoefficientError,
    DomainError,
    HorizonSelectionError,
    QuadratureError,
    RhsEvaluationError,
    SpecValidationError,
    StieltjesError,
    UndefinedPointError,
)
from .exponential import (
    CONDITIONING_TOL,
    POSITIVE_FACTORS,
    SIGN_CHANGING,
    VANISHING,
    ZERO_FACTOR_TOL,
    GExponential,
    JumpFactor,
    LinearCoefficient,
    LinearSolutionReport,
    g_exponential,
    transform_coefficient,
    verify_linear_solution,
)
from .measure import (
    NEGATIVE_PART,
    POSITIVE_PART,
    SIGNED,
    TOTAL_VARIATION,
    HahnRow,
    Integrand,
    StieltjesMeasure,
    hahn_check,
    integrate,
    measure_of_interval,
    measure_of_point,
)
from .plume import (
    AmbientDensity,
    BuoyancyJumpRow,
    PlumeAudit,
    PlumeParams,
    build_plume_system,
    flux_to_geometry,
    run_plume,
)
from .solver import (
    CaratheodoryBound,
    JumpAuditRow,
    SolutionReport,
    SolveConfig,
    SystemSpec,
    select_horizon,
    solve,
    solve_euler,
    solve_picard,
    system_grid,
)
from .specio import (
    load_json,
    parse_derivator,
    parse_integrand,
    parse_system,
    serialize_derivator,
)

__version__ = "0.1.0"

__all__ = [
    "AmbientDensity",
    "BuoyancyJumpRow",
    "CONDITIONING_TOL",
    "CONSTANT",
    "CaratheodoryBound",
    "ChainRuleReport",
    "ConstantProfile",
    "ConvergenceError",
    "DegenerateCoefficientError",
    "Derivator",
    "DomainError",
    "FtcReport",
    "GExponential",
    "HahnRow",
    "HorizonSelectionError",
    "Integrand",
    "Jump",
    "JumpAuditRow",
    "JumpFactor",
    "LinearCoefficient",
    "LinearProfile",
    "LinearSolutionReport",
    "NEGATIVE",
    "NEGATIVE_PART",
    "NONDECREASING",
    "NONINCREASING",
    "POSITIVE",
    "POSITIVE_FACTORS",
    "POSITIVE_PART",
    "PlumeAudit",
    "PlumeParams",
    "PowerProfile",
    "QuadratureError",
    "RhsEvaluationError",
    "SIGNED",
    "SIGN_CHANGING",
    "Segment",
    "SolutionReport",
    "SolveConfig",
    "SpecValidationError",
    "StieltjesError",
    "StieltjesMeasure",
    "StructuralSets",
    "SystemSpec",
    "TOTAL",
    "TOTAL_VARIATION",
    "TabulatedProfile",
    "Trajectory",
    "UndefinedPointError",
    "VANISHING",
    "ZERO_FACTOR_TOL",
    "build_plume_system",
    "chain_rule_check",
    "derivative_estimates",
    "flux_to_geometry",
    "ftc_roundtrip",
    "g_continuity_modulus",
    "g_derivative",
    "g_derivative_fn",
    "g_exponential",
    "hahn_check",
    "integrate",
    "load_json",
    "measure_of_interval",
    "measure_of_point",
    "parse_derivator",
    "parse_integrand",
    "parse_system",
    "primitive",
    "run_plume",
    "select_horizon",
    "serialize_derivator",
    "solve",
    "solve_euler",
    "solve_picard",
    "system_grid",
    "transform_coefficient",
    "uniform_grid",
    "verify_linear_solution",
]
