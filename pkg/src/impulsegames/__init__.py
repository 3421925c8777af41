"""Numerical solver for two-player nonzero-sum stochastic impulse games.

Workflow: describe a game (:mod:`impulsegames.games`), discretise it on a
grid (:mod:`impulsegames.discretise`), solve the coupled system of
quasi-variational inequalities by relaxed policy iteration
(:mod:`impulsegames.solver`), and verify the extracted equilibrium against
the closed-form linear-payoff solution (:mod:`impulsegames.closed_form`)
and by Monte Carlo simulation (:mod:`impulsegames.montecarlo`).
"""

from .closed_form import BenchmarkClosedForm, closed_form, exact_value, solve_xi
from .discretise import (DiscreteGenerator, Grid, LossResult, SubProblem,
                         build_generator, build_grid, cost_matrix,
                         gain_operator, is_m_operator, loss_operator,
                         restrict_subproblem)
from .games import (BenchmarkParams, CappedParams, GameSpec, ParabolicParams,
                    build_benchmark, build_capped, build_parabolic)
from .guesses import staged_benchmark_guess, unilateral_pair, unilateral_value
from .howard import HowardConfig, HowardResult, qvi_residual, solve_howard
from .montecarlo import (SimConfig, Trajectory, estimate_objective,
                         objective_from_trajectory, perturb_strategy, simulate)
from .solver import (ResidualBreakdown, SolveResult, SolverConfig, Strategy,
                     extract_equilibrium, solve_system, system_residual)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkClosedForm", "BenchmarkParams", "CappedParams",
    "DiscreteGenerator", "GameSpec", "Grid", "HowardConfig", "HowardResult",
    "LossResult", "ParabolicParams", "ResidualBreakdown", "SimConfig",
    "SolveResult", "SolverConfig", "Strategy", "SubProblem", "Trajectory",
    "build_benchmark", "build_capped", "build_generator", "build_grid",
    "build_parabolic", "closed_form", "cost_matrix", "estimate_objective",
    "exact_value", "extract_equilibrium", "gain_operator", "is_m_operator",
    "loss_operator", "objective_from_trajectory", "perturb_strategy",
    "qvi_residual", "restrict_subproblem", "simulate", "solve_howard",
    "solve_system", "solve_xi", "staged_benchmark_guess", "system_residual",
    "unilateral_pair", "unilateral_value",
]
