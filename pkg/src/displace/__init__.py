"""Calculus over displacement structures on a compact interval.

The package builds Stieltjes gauges from displacement data, classifies
points into jump, flat, and continuity regions, differentiates and
integrates against the resulting measures, and solves initial-value and
terminal-value problems driven by them.  A small expression language
powers the CLI and the JSON serialization of specs and gauges.
"""

from .calculus import (CalculusError, CumulativeStieltjesIntegral,
                       DerivativeError, DerivativeResult, FtcReport,
                       MeasurePath, delta_derivative, ftc2_check,
                       ftc_forward_check, pair_derivative, path_integral,
                       stieltjes_integral)
from .displacement import (ALGEBRAIC_TOL, BUILTIN_NAMES, LIMIT_TOL, Angular,
                           AxiomReport, BallInterval, DisplacementError,
                           FiniteGraph, GammaEstimate, Smooth, Stieltjes,
                           check_d2_positive,
                           check_h1, check_h2prime, check_h2_usc, check_h3,
                           check_h5, delta_ball, gamma_estimate,
                           gauge_from_smooth, make_builtin, rn_density,
                           spec_from_dict, spec_to_dict)
from .expr import (DomainError, EvalError, Expr, ExprError, ParseError,
                   as_function, evaluate, parse, substitute)
from .gauge import DistinguishedSets, Gauge, GaugeError
from .solver import (IvpProblem, IvpSolution, JumpRecord, ResidualReport,
                     SolverError, SurfaceProblem, solve_ivp, solve_surface,
                     verify_solution)

__version__ = "0.1.0"

__all__ = [
    "ALGEBRAIC_TOL", "LIMIT_TOL",
    "Expr", "ExprError", "ParseError", "EvalError", "DomainError",
    "parse", "evaluate", "substitute", "as_function",
    "Gauge", "GaugeError", "DistinguishedSets",
    "Smooth", "Stieltjes", "FiniteGraph", "Angular",
    "DisplacementError", "make_builtin", "BUILTIN_NAMES",
    "AxiomReport", "GammaEstimate", "BallInterval",
    "check_h1", "check_h2_usc", "check_h2prime", "check_h3", "check_h5",
    "check_d2_positive",
    "gamma_estimate", "rn_density", "delta_ball", "gauge_from_smooth",
    "spec_to_dict", "spec_from_dict",
    "CalculusError", "DerivativeError", "DerivativeResult",
    "delta_derivative", "pair_derivative",
    "CumulativeStieltjesIntegral", "stieltjes_integral",
    "MeasurePath", "path_integral",
    "FtcReport", "ftc_forward_check", "ftc2_check",
    "SolverError", "IvpProblem", "SurfaceProblem", "IvpSolution",
    "JumpRecord", "ResidualReport",
    "solve_ivp", "solve_surface", "verify_solution",
    "__version__",
]
