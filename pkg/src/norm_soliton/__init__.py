"""Normalized standing waves of the Schrodinger-Poisson equation with combined powers.

Radial discretization, energy and fiber-map geometry, sharp Gagliardo-Nirenberg
constants and thresholds, constrained critical-point solvers, and time evolution.
"""

from .constants import ThresholdReport, gn_constant, solve_soliton, thresholds
from .dynamics import (EvolutionState, StabilityVerdict, evolve, instability_experiment,
                       stability_experiment, virial_diagnostics)
from .errors import (NormSolitonError, NumericError, ParameterError, RegimeError,
                     SolverError)
from .functionals import (EnergyBreakdown, FiberProfile, energy, fiber_profile,
                          nehari_residual, pohozaev, pohozaev_identity_residual)
from .grid import RadialField, RadialGrid, make_grid
from .params import ProblemParams
from .regimes import RegimeTag, classify_regime
from .solvers import (SolveReport, SolverOptions, continuation_mu_to_zero,
                      continuation_q_to_critical, energy_minimizer, ground_state_local_min,
                      mountain_pass)

__all__ = [
    "ThresholdReport", "gn_constant", "solve_soliton", "thresholds",
    "EvolutionState", "StabilityVerdict", "evolve", "instability_experiment",
    "stability_experiment", "virial_diagnostics",
    "NormSolitonError", "NumericError", "ParameterError", "RegimeError", "SolverError",
    "EnergyBreakdown", "FiberProfile", "energy", "fiber_profile", "nehari_residual",
    "pohozaev", "pohozaev_identity_residual",
    "RadialField", "RadialGrid", "make_grid", "ProblemParams", "RegimeTag", "classify_regime",
    "SolveReport", "SolverOptions", "continuation_mu_to_zero", "continuation_q_to_critical",
    "energy_minimizer", "ground_state_local_min", "mountain_pass",
]
