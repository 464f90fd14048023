"""Splitting Gibbs measures of the hard-core and soft-core Widom-Rowlinson model on Cayley trees."""

from .brackets import BracketQuadruple, iterate_bounds, uniqueness_certificate
from .critical import CriticalValues, critical_values
from .model import (
    BoundaryLawPair,
    DomainError,
    FieldAssignment,
    ModelParams,
    StateSpaceTooLarge,
    TreeIndex,
    UnsupportedRegimeError,
    UsageError,
    eval_F,
    eval_f,
    field_recursion_residual,
    recursion_map,
)
from .oracle import (
    FiniteVolumeMeasure,
    check_compatibility,
    enumerate_measure,
    marginal_from_boundary_law,
    marginal_ordering_probe,
)
from .paths import PathSpec, distinguish_paths, lipschitz_constant, solve_path_field
from .periodic import TwoPeriodicSolution, eval_phi, hole_density_gap, periodic_window, solve_two_periodic
from .tisgm import (
    PhaseReport,
    TisgmSolutionSet,
    classify_phase,
    conjecture_scan,
    solve_diagonal,
    solve_offdiagonal_general,
    solve_offdiagonal_k2,
    solve_offdiagonal_k3,
    solve_tisgm,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryLawPair", "BracketQuadruple", "CriticalValues", "DomainError", "FieldAssignment",
    "FiniteVolumeMeasure", "ModelParams", "PathSpec", "PhaseReport", "StateSpaceTooLarge",
    "TisgmSolutionSet", "TreeIndex", "TwoPeriodicSolution", "UnsupportedRegimeError", "UsageError",
    "check_compatibility", "classify_phase", "conjecture_scan", "critical_values", "distinguish_paths",
    "enumerate_measure", "eval_F", "eval_f", "eval_phi", "field_recursion_residual", "hole_density_gap",
    "iterate_bounds", "lipschitz_constant", "marginal_from_boundary_law", "marginal_ordering_probe",
    "periodic_window", "recursion_map", "solve_diagonal", "solve_offdiagonal_general",
    "solve_offdiagonal_k2", "solve_offdiagonal_k3", "solve_path_field", "solve_tisgm",
    "solve_two_periodic", "uniqueness_certificate",
]
