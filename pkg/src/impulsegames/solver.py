"""Relaxed policy iteration for the coupled pair of quasi-variational
inequalities of a two-player impulse game.

Each sweep splits the grid, for every player, into the opponent's approximate
continuation region {loss(V_j) - V_j < -r} and its complement. On the
complement the player's value is recomputed through the gain operator; inside
it a one-player obstacle problem (with the exterior values frozen) is solved
by policy iteration. The slack r decays geometrically to the tolerance, and
convergence is measured by the largest pointwise residual of the full system,
not by the step size. Both players read the opponent's previous sweep by
default (a Gauss-Seidel variant is available behind a flag).

Residual breakdown categories follow the three relations of the system: the
sign of the own-loss relation everywhere, the gain relation on the opponent's
intervention region, and the PDE/obstacle maximum on the opponent's
continuation region. The printed-formula variant that swaps the last two
regions is available behind ``verbatim_residual`` for comparison.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .discretise import (DiscreteGenerator, Grid, LossResult, build_generator,
                         cost_matrix, gain_operator, loss_operator,
                         restrict_subproblem, _eval_on, _same_grid)
from .games import GameSpec
from .howard import HowardConfig, solve_howard

logger = logging.getLogger(__name__)

CATEGORY_NAMES = ("obstacle", "gain", "pde-max")


@dataclass(frozen=True)
class SolverConfig:
    """Outer tolerance eps, relaxation decay alpha, initial slack r0."""

    eps: float = 1e-8
    alpha: float = 0.8
    r0: float = 1.0
    k_max: int = 1000
    inner: HowardConfig = field(default_factory=HowardConfig)
    gauss_seidel: bool = False
    verbatim_residual: bool = False
    costed_exterior: bool = True

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps > 0 required")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha in (0, 1) required")
        if self.r0 < self.eps:
            raise ValueError("r0 >= eps required")
        if self.k_max < 1:
            raise ValueError("k_max >= 1 required")


@dataclass(frozen=True, eq=False)
class ResidualBreakdown:
    """Per-node worst residual term and its category, for both players."""

    per_node: tuple[np.ndarray, np.ndarray]
    category: tuple[np.ndarray, np.ndarray]
    worst_player: int
    worst_node: int
    worst_category: str
    value: float


@dataclass(eq=False)
class SolveResult:
    V: tuple[np.ndarray, np.ndarray]
    converged: bool
    status: str                      # 'converged' | 'max_iterations' | 'degenerate'
    iterations: int
    residual_history: np.ndarray
    relaxation_history: np.ndarray
    breakdown: ResidualBreakdown | None
    grid: Grid
    inner_iterations: list[int]
    message: str = ""


class _SystemContext:
    """Per-solve cache: generators, payoff vectors and cost matrices."""

    def __init__(self, game: GameSpec, grid: Grid):
        self.game = game
        self.grid = grid
        self.gen = tuple(build_generator(grid, game, i) for i in (1, 2))
        self.f = tuple(self.gen[i].payoff_vector(_eval_on(game.running_payoff[i], grid.x))
                       for i in (0, 1))
        self.cost = tuple(cost_matrix(grid, game, i) for i in (1, 2))


def system_residual(V, grid: Grid, game: GameSpec, eps: float,
                    context: _SystemContext | None = None,
                    verbatim: bool = False) -> tuple[float, ResidualBreakdown]:
    """Largest pointwise residual of the coupled system at tolerance eps.

    Regions are cut with the opponent's loss slack at eps:
    C_j = {loss(V_j) - V_j < -eps}. The gain relation is checked off C_j and
    the PDE/obstacle maximum on C_j (swapped when ``verbatim``).
    """
    ctx = context if context is not None else _SystemContext(game, grid)
    V = (_same_grid(grid, V[0]), _same_grid(grid, V[1]))
    loss = [loss_operator(grid, V[i], i + 1, game, ctx.cost[i]) for i in (0, 1)]
    slack = [loss[i].values - V[i] for i in (0, 1)]
    cont = [slack[i] < -eps for i in (0, 1)]

    per_node = []
    category = []
    for i in (0, 1):
        j = 1 - i
        obstacle_term = np.maximum(slack[i], 0.0)
        gain = gain_operator(grid, V[i], loss[j], i + 1, game)
        gain_term = np.abs(gain - V[i])
        pde = ctx.gen[i].apply(V[i]) - game.rho[i] * V[i] + ctx.f[i]
        pde_term = np.abs(np.maximum(pde, slack[i]))
        gain_region = cont[j] if verbatim else ~cont[j]
        pde_region = ~cont[j] if verbatim else cont[j]
        stack = np.vstack([obstacle_term,
                           np.where(gain_region, gain_term, -np.inf),
                           np.where(pde_region, pde_term, -np.inf)])
        cat = np.argmax(stack, axis=0)
        per_node.append(stack[cat, np.arange(grid.n)])
        category.append(cat)

    worst = [float(p.max()) for p in per_node]
    wp = int(np.argmax(worst))
    wn = int(np.argmax(per_node[wp]))
    breakdown = ResidualBreakdown(
        per_node=(per_node[0], per_node[1]),
        category=(category[0], category[1]),
        worst_player=wp + 1,
        worst_node=wn,
        worst_category=CATEGORY_NAMES[int(category[wp][wn])],
        value=worst[wp],
    )
    return max(worst), breakdown


def solve_system(game: GameSpec, grid: Grid, V0, config: SolverConfig) -> SolveResult:
    """Run the relaxed policy iteration from the initial pair ``V0``.

    Stops when the system residual drops below ``config.eps`` or after
    ``config.k_max`` sweeps; an empty approximate continuation region for
    either player aborts the run with a 'degenerate' status.
    """
    ctx = _SystemContext(game, grid)
    V = [np.array(_same_grid(grid, V0[i]), dtype=float) for i in (0, 1)]
    for v in V:
        if not np.all(np.isfinite(v)):
            raise ValueError("initial guess must be finite")

    res_hist: list[float] = []
    relax_hist: list[float] = []
    inner_its: list[int] = []
    breakdown = None
    status = "max_iterations"
    message = ""

    for k in range(config.k_max):
        r = max(config.alpha**k * config.r0, config.eps)
        snapshot = (V[0], V[1])
        new_V: list[np.ndarray | None] = [None, None]
        degenerate = False
        for i in (0, 1):
            j = 1 - i
            Vj = new_V[j] if (config.gauss_seidel and new_V[j] is not None) else snapshot[j]
            Vi = snapshot[i]
            loss_j = loss_operator(grid, Vj, j + 1, game, ctx.cost[j])
            cont_j = (loss_j.values - Vj) < -r
            if not cont_j.any():
                status = "degenerate"
                message = (f"player {j + 1} intervenes on the whole grid at sweep {k} "
                           f"(relaxation r = {r:.3e}); aborting")
                degenerate = True
                break
            out = gain_operator(grid, Vi, loss_j, i + 1, game)
            K = np.flatnonzero(cont_j)
            sub = restrict_subproblem(ctx.gen[i], ctx.f[i], K, exterior=out,
                                      game=game, cost_mat=ctx.cost[i],
                                      costed_exterior=config.costed_exterior)
            inner = solve_howard(sub, Vi[K], config.inner)
            inner_its.append(inner.iterations)
            if not inner.converged:
                logger.warning("inner policy iteration hit its cap at sweep %d (player %d, "
                               "step norm %.3e)", k, i + 1, inner.final_step_norm)
            out[K] = inner.values
            new_V[i] = out
        if degenerate:
            break

        V = [new_V[0], new_V[1]]
        R, breakdown = system_residual(V, grid, game, config.eps, ctx,
                                       verbatim=config.verbatim_residual)
        res_hist.append(R)
        relax_hist.append(r)
        logger.debug("sweep %d: r = %.3e, residual = %.3e", k, r, R)
        if R <= config.eps:
            status = "converged"
            break

    if breakdown is None:
        _, breakdown = system_residual(V, grid, game, config.eps, ctx,
                                       verbatim=config.verbatim_residual)
    return SolveResult(V=(V[0], V[1]), converged=(status == "converged"),
                       status=status, iterations=len(res_hist),
                       residual_history=np.asarray(res_hist),
                       relaxation_history=np.asarray(relax_hist),
                       breakdown=breakdown, grid=grid,
                       inner_iterations=inner_its, message=message)


@dataclass(frozen=True, eq=False)
class Strategy:
    """Threshold strategy: continuation intervals plus impulse destinations.

    ``node_ranges`` are the inclusive index ranges of the continuation runs
    when the strategy was read off a grid (empty for synthetic strategies);
    ``intervention_x``/``intervention_target_x`` give the destination map on
    the intervention set.
    """

    continuation: tuple[tuple[float, float], ...]
    node_ranges: tuple[tuple[int, int], ...]
    intervention_x: np.ndarray
    intervention_target_x: np.ndarray

    def contains(self, x) -> np.ndarray | bool:
        x = np.asarray(x, dtype=float)
        inside = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.continuation:
            inside |= (x > lo) & (x < hi)
        return bool(inside) if inside.ndim == 0 else inside

    def destination(self, x) -> np.ndarray | float:
        """Impulse destination for states outside the continuation region
        (nearest intervention node's target)."""
        if self.intervention_x.size == 0:
            raise ValueError("strategy never intervenes; no destination defined")
        x = np.asarray(x, dtype=float)
        idx = np.argmin(np.abs(self.intervention_x[:, None] - x.ravel()[None, :]), axis=0)
        out = self.intervention_target_x[idx].reshape(x.shape)
        return float(out) if out.ndim == 0 else out


def extract_equilibrium(V, grid: Grid, game: GameSpec, eps: float,
                        context: _SystemContext | None = None) -> tuple[Strategy, Strategy]:
    """Read the candidate Nash equilibrium off a (near-)converged pair.

    Player i continues where her loss slack stays below -eps; on the
    complement the impulse destination is the loss-operator target. Interval
    endpoints are reported halfway between the last continuation node and the
    first intervention node; runs touching the grid boundary extend to
    +-infinity.
    """
    ctx = context if context is not None else _SystemContext(game, grid)
    out = []
    for i in (0, 1):
        v = _same_grid(grid, V[i])
        loss = loss_operator(grid, v, i + 1, game, ctx.cost[i])
        cont = (loss.values - v) < -eps
        intervals: list[tuple[float, float]] = []
        ranges: list[tuple[int, int]] = []
        k = 0
        while k < grid.n:
            if cont[k]:
                start = k
                while k + 1 < grid.n and cont[k + 1]:
                    k += 1
                lo = -np.inf if start == 0 else 0.5 * (grid.x[start - 1] + grid.x[start])
                hi = np.inf if k == grid.n - 1 else 0.5 * (grid.x[k] + grid.x[k + 1])
                intervals.append((lo, hi))
                ranges.append((start, k))
            k += 1
        inter = np.flatnonzero(~cont)
        out.append(Strategy(continuation=tuple(intervals),
                            node_ranges=tuple(ranges),
                            intervention_x=grid.x[inter],
                            intervention_target_x=grid.x[loss.target[inter]]))
    return out[0], out[1]
