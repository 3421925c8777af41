"""Spatial grid and finite-difference discretisation.

The generator of the uncontrolled diffusion is discretised on an equispaced
grid with a first-order upwind difference for the drift and a central
difference for the diffusion term, which keeps the scheme monotone. Ghost
nodes outside the domain are eliminated with prescribed Neumann slopes
(first-order one-sided differences), and the constants produced by the
elimination are returned separately so they can be folded into the payoff
vector.

Intervention operators are discretised by scanning every grid node as a
candidate impulse destination; argmax ties break to the smallest node index
so that all results are deterministic.

Fields sampled on a grid are plain float arrays of length ``grid.n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .games import GameSpec


@dataclass(frozen=True, eq=False)
class Grid:
    """Equispaced mesh of M steps between x_min < 0 < x_max (M+1 nodes)."""

    x_min: float
    x_max: float
    M: int
    h: float
    x: np.ndarray

    @property
    def n(self) -> int:
        return self.M + 1


def build_grid(x_min: float, x_max: float, M: int) -> Grid:
    """Build the mesh x_k = x_min + k*h, h = (x_max - x_min)/M."""
    if not x_min < 0.0 < x_max:
        raise ValueError(f"grid bounds must satisfy x_min < 0 < x_max, got ({x_min}, {x_max})")
    if M < 2:
        raise ValueError(f"M >= 2 required, got {M}")
    M = int(M)
    h = (x_max - x_min) / M
    x = x_min + h * np.arange(M + 1)
    x.setflags(write=False)
    return Grid(float(x_min), float(x_max), M, h, x)


def _same_grid(grid: Grid, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n,):
        raise ValueError(f"field of shape {values.shape} does not match grid with {grid.n} nodes")
    return values


def _eval_on(fn, x) -> np.ndarray:
    out = np.asarray(fn(x), dtype=float)
    return np.broadcast_to(out, np.shape(x)).astype(float, copy=False)


@dataclass(frozen=True, eq=False)
class DiscreteGenerator:
    """Discretised diffusion generator for one player, ghost nodes eliminated.

    ``bands`` has rows (lower, diag, upper) with lower[0] = upper[-1] = 0;
    row k of the matrix couples nodes k-1, k, k+1. ``bc_payoff_correction``
    holds the boundary constants from the ghost elimination; the payoff
    vector entering the linear systems is ``f(x) + bc_payoff_correction``.
    """

    grid: Grid
    player: int
    bands: np.ndarray
    bc_payoff_correction: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Matrix-vector product with the generator."""
        v = _same_grid(self.grid, values)
        lower, diag, upper = self.bands
        out = diag * v
        out[:-1] += upper[:-1] * v[1:]
        out[1:] += lower[1:] * v[:-1]
        return out

    def payoff_vector(self, f_values: np.ndarray) -> np.ndarray:
        return _same_grid(self.grid, f_values) + self.bc_payoff_correction


def build_generator(grid: Grid, game: GameSpec, player: int) -> DiscreteGenerator:
    """Assemble the upwind scheme rows and eliminate the two ghost nodes.

    The drift uses the one-sided difference in the direction of mu (forward
    when mu >= 0, matching sign(0) = 1), so off-diagonals stay nonnegative.
    Degenerate rows (sigma = 0 and mu = 0) are rejected: the scheme has no
    coupling there and the policy systems would lose strict dominance.
    """
    x, h = grid.x, grid.h
    mu = _eval_on(game.mu, x)
    sig = _eval_on(game.sigma, x)
    if np.any(sig < 0):
        raise ValueError("sigma(x) must be nonnegative on the grid")
    dead = (sig == 0.0) & (mu == 0.0)
    if np.any(dead):
        k = int(np.flatnonzero(dead)[0])
        raise ValueError(f"degenerate generator row at node {k} (x = {x[k]}): sigma = 0 and mu = 0")

    diff = sig**2 / (2.0 * h * h)
    lower = diff + np.maximum(-mu, 0.0) / h
    upper = diff + np.maximum(mu, 0.0) / h
    diag = -2.0 * diff - np.abs(mu) / h

    correction = np.zeros(grid.n)
    slope_left, slope_right = game.slopes(player)
    # Ghost values: V(x_min - h) = V(x_min) - h*slope_left and
    # V(x_max + h) = V(x_max) + h*slope_right.
    diag[0] += lower[0]
    correction[0] = -lower[0] * h * slope_left
    lower[0] = 0.0
    diag[-1] += upper[-1]
    correction[-1] = upper[-1] * h * slope_right
    upper[-1] = 0.0

    bands = np.vstack([lower, diag, upper])
    bands.setflags(write=False)
    correction.setflags(write=False)
    return DiscreteGenerator(grid=grid, player=int(player), bands=bands,
                             bc_payoff_correction=correction)


def is_m_operator(bands: np.ndarray) -> bool:
    """Row check for (negated) strictly diagonally dominant M-operators:
    nonnegative off-diagonals, negative diagonal, |diag| > sum of off-diags."""
    lower, diag, upper = bands
    off = lower + upper
    return bool(np.all(lower >= 0) and np.all(upper >= 0)
                and np.all(diag < 0) and np.all(-diag > off))


def cost_matrix(grid: Grid, game: GameSpec, player: int) -> np.ndarray:
    """Matrix C[k, l] = cost of player shifting the state from x_k to x_l."""
    x = grid.x
    cost = game.cost_fn(player)
    out = np.asarray(cost(x[:, None], x[None, :] - x[:, None]), dtype=float)
    return np.broadcast_to(out, (grid.n, grid.n)).astype(float, copy=False)


@dataclass(frozen=True, eq=False)
class LossResult:
    """Best intervention value per node and the destination attaining it."""

    values: np.ndarray
    target: np.ndarray


def loss_operator(grid: Grid, values: np.ndarray, player: int, game: GameSpec,
                  cost_mat: np.ndarray | None = None) -> LossResult:
    """max over destinations y of V(y) + cost(x, y - x), for every node x.

    Ties pick the smallest destination index; the same index feeds the
    opponent's gain operator.
    """
    v = _same_grid(grid, values)
    if not np.all(np.isfinite(v)):
        raise ValueError("loss operator requires a finite field")
    if cost_mat is None:
        cost_mat = cost_matrix(grid, game, player)
    cand = v[None, :] + cost_mat
    target = np.argmax(cand, axis=1)
    vals = cand[np.arange(grid.n), target]
    return LossResult(values=vals, target=target)


def gain_operator(grid: Grid, values: np.ndarray, opponent_loss: LossResult,
                  player: int, game: GameSpec) -> np.ndarray:
    """Value of ``player`` after the opponent's best intervention, plus the
    compensation for that shift."""
    v = _same_grid(grid, values)
    target = opponent_loss.target
    if target.shape != (grid.n,):
        raise ValueError("opponent loss result does not match the grid")
    y = grid.x[target]
    psi = game.gain_fn(player)
    comp = np.asarray(psi(grid.x, y - grid.x), dtype=float)
    return v[target] + np.broadcast_to(comp, (grid.n,))


@dataclass(frozen=True, eq=False)
class SubProblem:
    """One-player obstacle problem restricted to the node set ``indices``.

    ``bands`` stores L = A_KK - rho*I row-wise; ``g`` is the payoff plus the
    coupling of boundary-adjacent rows to the frozen exterior values;
    ``obstacle_floor`` is the per-node lower bound entering every impulse
    candidate (the contribution of exterior destinations); ``h_cap`` is the
    plain maximum of the exterior values (-inf when there is no exterior).
    """

    indices: np.ndarray
    x: np.ndarray
    bands: np.ndarray
    g: np.ndarray
    cost: np.ndarray
    obstacle_floor: np.ndarray
    h_cap: float


def restrict_subproblem(generator: DiscreteGenerator, payoff: np.ndarray,
                        indices: np.ndarray, exterior: np.ndarray,
                        game: GameSpec, cost_mat: np.ndarray | None = None,
                        costed_exterior: bool = True) -> SubProblem:
    """Restrict the QVI of ``generator.player`` to the subgrid ``indices``.

    ``exterior`` is a full-length field; only its entries off the subgrid are
    read. With ``costed_exterior`` (the default) exterior destinations enter
    the obstacle with their intervention cost, i.e. the obstacle is the full
    loss scan with frozen exterior values. The alternative replaces them with
    the flat cap max(exterior), which overestimates the obstacle whenever
    exterior values dominate.
    """
    grid = generator.grid
    K = np.asarray(indices, dtype=int)
    if K.size == 0:
        raise ValueError("empty subgrid: the all-intervention case must be handled by the caller")
    if np.any(np.diff(K) <= 0):
        raise ValueError("subgrid indices must be strictly increasing")
    if K[0] < 0 or K[-1] >= grid.n:
        raise ValueError("subgrid indices out of range")
    payoff = _same_grid(grid, payoff)
    exterior = _same_grid(grid, exterior)
    if cost_mat is None:
        cost_mat = cost_matrix(grid, game, generator.player)

    rho = game.discount(generator.player)
    lower_full, diag_full, upper_full = generator.bands
    m = K.size
    in_K = np.zeros(grid.n, dtype=bool)
    in_K[K] = True

    diag = diag_full[K] - rho
    lower = np.zeros(m)
    upper = np.zeros(m)
    g = payoff[K].copy()
    # Keep a coupling only when the original neighbour is also in the subgrid
    # and adjacent within it; otherwise the neighbour's frozen value moves to
    # the source term.
    left_nb = K - 1
    has_left = left_nb >= 0
    left_in = has_left & in_K[np.clip(left_nb, 0, grid.n - 1)]
    adj_left = np.zeros(m, dtype=bool)
    adj_left[1:] = left_in[1:] & (K[:-1] == left_nb[1:])
    lower[adj_left] = lower_full[K[adj_left]]
    ext_left = has_left & ~in_K[np.clip(left_nb, 0, grid.n - 1)]
    g[ext_left] += lower_full[K[ext_left]] * exterior[left_nb[ext_left]]

    right_nb = K + 1
    has_right = right_nb <= grid.n - 1
    right_in = has_right & in_K[np.clip(right_nb, 0, grid.n - 1)]
    adj_right = np.zeros(m, dtype=bool)
    adj_right[:-1] = right_in[:-1] & (K[1:] == right_nb[:-1])
    upper[adj_right] = upper_full[K[adj_right]]
    ext_right = has_right & ~in_K[np.clip(right_nb, 0, grid.n - 1)]
    g[ext_right] += upper_full[K[ext_right]] * exterior[right_nb[ext_right]]

    out = np.flatnonzero(~in_K)
    if out.size == 0:
        h_cap = -np.inf
        floor = np.full(m, -np.inf)
    else:
        h_cap = float(exterior[out].max())
        if costed_exterior:
            floor = (exterior[out][None, :] + cost_mat[np.ix_(K, out)]).max(axis=1)
        else:
            floor = np.full(m, h_cap)

    bands = np.vstack([lower, diag, upper])
    return SubProblem(indices=K, x=grid.x[K], bands=bands, g=g,
                      cost=cost_mat[np.ix_(K, K)], obstacle_floor=floor,
                      h_cap=h_cap)
