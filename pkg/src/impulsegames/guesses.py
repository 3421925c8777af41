"""Educated initial guesses for the system solver.

Two constructions are provided: the value function of a unilateral game
(the opponent never intervenes, leaving a standard one-player impulse control
problem), and the staged pipeline for the linear-payoff game, which first
solves the capped variant and hands its value pair over as the initial guess.
The unilateral construction requires a payoff that attains its maximum inside
the domain; for unbounded payoffs the one-player problem is ill posed and a
warning is emitted.
"""

from __future__ import annotations

import dataclasses
import logging
import warnings

import numpy as np

from .discretise import Grid, build_generator, cost_matrix, restrict_subproblem, _eval_on
from .games import BenchmarkParams, CappedParams, GameSpec, build_capped
from .howard import HowardConfig, solve_howard
from .solver import SolverConfig, solve_system

logger = logging.getLogger(__name__)


def unilateral_value(game: GameSpec, active_player: int, grid: Grid,
                     inner: HowardConfig | None = None) -> np.ndarray:
    """Value of ``active_player`` when the opponent never intervenes.

    Solves the single obstacle problem max{A V - rho V + f, loss(V) - V} = 0
    on the full grid with zero Neumann slopes (the opponent's compensation
    structure, which fixes the boundary slopes of the full game, is absent
    here).
    """
    if inner is None:
        inner = HowardConfig()
    f = _eval_on(game.running_payoff[active_player - 1], grid.x)
    k_star = int(np.argmax(f))
    edge_rise = ((k_star == 0 and f[0] > f[1])
                 or (k_star == grid.n - 1 and f[-1] > f[-2]))
    if edge_rise:
        warnings.warn(
            f"running payoff of player {active_player} peaks at the domain boundary; "
            "the unilateral game may be ill posed (unbounded value)", stacklevel=2)

    solo = dataclasses.replace(game, neumann_slopes=((0.0, 0.0), (0.0, 0.0)))
    gen = build_generator(grid, solo, active_player)
    sub = restrict_subproblem(gen, gen.payoff_vector(f), np.arange(grid.n),
                              exterior=np.zeros(grid.n), game=solo,
                              cost_mat=cost_matrix(grid, solo, active_player))
    result = solve_howard(sub, np.zeros(grid.n), inner)
    if not result.converged:
        logger.warning("unilateral solve for player %d hit the iteration cap "
                       "(step norm %.3e)", active_player, result.final_step_norm)
    return result.values


def unilateral_pair(game: GameSpec, grid: Grid,
                    inner: HowardConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Unilateral values of both players, used as an initial guess pair."""
    return (unilateral_value(game, 1, grid, inner),
            unilateral_value(game, 2, grid, inner))


def staged_benchmark_guess(params: BenchmarkParams, K: float, grid: Grid,
                           config: SolverConfig,
                           capped_guess: str = "zero") -> tuple[np.ndarray, np.ndarray]:
    """Initial guess for the linear-payoff game: solve its capped variant.

    The capped game keeps the cost/gain structure (hence the boundary slopes)
    of the original and only truncates the payoffs at K, so its value pair
    approximates the target values closely. ``capped_guess`` selects the
    guess for the capped solve itself: 'zero' or 'unilateral'.
    """
    if K <= 0:
        raise ValueError("K > 0 required")
    capped = build_capped(CappedParams(sigma=params.sigma, rho=params.rho,
                                       s1=params.s1, s2=params.s2, c=params.c,
                                       c_tilde=params.c_tilde, lam=params.lam,
                                       lam_tilde=params.lam_tilde, K=K))
    if capped_guess == "zero":
        guess = (np.zeros(grid.n), np.zeros(grid.n))
    elif capped_guess == "unilateral":
        try:
            guess = unilateral_pair(capped, grid, config.inner)
        except Exception as exc:
            raise RuntimeError("staged guess, unilateral stage failed") from exc
    else:
        raise ValueError(f"unknown capped_guess mode {capped_guess!r}")

    result = solve_system(capped, grid, guess, config)
    if result.status == "degenerate":
        raise RuntimeError(f"staged guess, capped stage aborted: {result.message}")
    if not result.converged:
        warnings.warn(
            f"staged guess: capped stage stopped unconverged after {result.iterations} "
            f"sweeps (residual {result.residual_history[-1]:.3e}); using its pair anyway",
            stacklevel=2)
    return result.V
