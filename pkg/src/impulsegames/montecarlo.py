"""Monte Carlo verification of candidate equilibria.

Simulates the controlled diffusion under a pair of threshold strategies with
the Euler-Maruyama scheme, estimates the truncated discounted objectives of
both players, and perturbs one player's strategy to probe the Nash property
(a unilateral deviation should not improve her objective beyond statistical
noise).

Interventions are detected at grid times only: after each step, player 1 acts
first if the state left her continuation region, then player 2, repeatedly
within the same time instant until the state rests in both regions. A fixed
cap on interventions per instant turns pathological strategy pairs (impulse
ping-pong) into errors instead of hangs.

Path noise streams are spawned per path index from the configured seed, so
estimates are reproducible and independent of batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .games import GameSpec
from .solver import Strategy

INSTANT_CAP = 10
_CHUNK = 4096


@dataclass(frozen=True)
class SimConfig:
    """Horizon T, step dt, number of paths N, RNG seed and starting point."""

    T: float
    dt: float
    N: int
    seed: int = 0
    x0: float = 0.0

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("T > 0 required")
        if not 0 < self.dt <= self.T:
            raise ValueError("0 < dt <= T required")
        if self.N < 1:
            raise ValueError("N >= 1 required")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass(frozen=True)
class InterventionRecord:
    time: float
    player: int
    impulse: float
    pre_state: float
    post_state: float


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    interventions: list[InterventionRecord] = field(default_factory=list)


def _path_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _check_strategies(strategies: tuple[Strategy, Strategy]) -> None:
    for i, s in enumerate(strategies, start=1):
        if s.intervention_x.size and not np.all(s.contains(s.intervention_target_x)):
            raise ValueError(f"player {i} strategy sends impulses outside her "
                             "own continuation region")


def simulate(game: GameSpec, strategies: tuple[Strategy, Strategy],
             cfg: SimConfig) -> Trajectory:
    """One Euler-Maruyama path under the given strategy pair.

    The path uses the noise stream of path index 0, so it coincides with the
    first path of :func:`estimate_objective` under the same configuration.
    """
    _check_strategies(strategies)
    s1, s2 = strategies
    rng = _path_rng(cfg.seed, 0)
    n = cfg.n_steps
    dt = cfg.dt
    sqdt = math.sqrt(dt)
    times = dt * np.arange(n + 1)
    states = np.empty(n + 1)
    records: list[InterventionRecord] = []

    def settle(x: float, t: float) -> float:
        for _ in range(INSTANT_CAP):
            if not s1.contains(x):
                player, dest = 1, float(s1.destination(x))
            elif not s2.contains(x):
                player, dest = 2, float(s2.destination(x))
            else:
                return x
            records.append(InterventionRecord(time=t, player=player,
                                              impulse=dest - x, pre_state=x,
                                              post_state=dest))
            x = dest
        raise RuntimeError(f"more than {INSTANT_CAP} interventions at t = {t:.6g}; "
                           "pathological strategy pair")

    x = settle(float(cfg.x0), 0.0)
    states[0] = x
    for k in range(n):
        z = rng.standard_normal()
        x = x + float(game.mu(x)) * dt + float(game.sigma(x)) * sqdt * z
        x = settle(x, times[k + 1])
        states[k + 1] = x
    return Trajectory(times=times, states=states, interventions=records)


def objective_from_trajectory(game: GameSpec, traj: Trajectory) -> tuple[float, float]:
    """Discounted objectives of both players along one recorded path
    (left-rectangle quadrature of the running payoff plus the recorded
    intervention costs/gains)."""
    dt = float(traj.times[1] - traj.times[0])
    out = []
    for i in (1, 2):
        rho = game.discount(i)
        disc = np.exp(-rho * traj.times[:-1])
        f = np.asarray(game.payoff_fn(i)(traj.states[:-1]), dtype=float)
        total = float(np.sum(disc * f) * dt)
        for rec in traj.interventions:
            w = math.exp(-rho * rec.time)
            if rec.player == i:
                total += w * float(game.cost_fn(i)(rec.pre_state, rec.impulse))
            else:
                total += w * float(game.gain_fn(i)(rec.pre_state, rec.impulse))
        out.append(total)
    return out[0], out[1]


def _settle_vector(x, t, J1, J2, game, s1: Strategy, s2: Strategy) -> None:
    """Apply interventions at one time instant across all paths, in place."""
    d1 = math.exp(-game.rho[0] * t)
    d2 = math.exp(-game.rho[1] * t)
    for _ in range(INSTANT_CAP):
        out1 = ~s1.contains(x)
        if np.any(out1):
            pre = x[out1]
            dest = np.atleast_1d(s1.destination(pre))
            delta = dest - pre
            J1[out1] += d1 * np.asarray(game.cost[0](pre, delta), dtype=float)
            J2[out1] += d2 * np.asarray(game.gain[1](pre, delta), dtype=float)
            x[out1] = dest
            continue
        out2 = ~s2.contains(x)
        if np.any(out2):
            pre = x[out2]
            dest = np.atleast_1d(s2.destination(pre))
            delta = dest - pre
            J2[out2] += d2 * np.asarray(game.cost[1](pre, delta), dtype=float)
            J1[out2] += d1 * np.asarray(game.gain[0](pre, delta), dtype=float)
            x[out2] = dest
            continue
        return
    raise RuntimeError(f"more than {INSTANT_CAP} interventions at t = {t:.6g}; "
                       "pathological strategy pair")


def estimate_objective(game: GameSpec, strategies: tuple[Strategy, Strategy],
                       cfg: SimConfig) -> tuple[tuple[float, float], tuple[float, float]]:
    """Monte Carlo mean and standard error of both players' truncated
    objectives, over ``cfg.N`` independent paths started at ``cfg.x0``."""
    _check_strategies(strategies)
    s1, s2 = strategies
    n, dt, N = cfg.n_steps, cfg.dt, cfg.N
    sqdt = math.sqrt(dt)
    rngs = [_path_rng(cfg.seed, i) for i in range(N)]

    x = np.full(N, float(cfg.x0))
    J1 = np.zeros(N)
    J2 = np.zeros(N)
    f1, f2 = game.running_payoff
    rho1, rho2 = game.rho

    _settle_vector(x, 0.0, J1, J2, game, s1, s2)
    k = 0
    while k < n:
        span = min(_CHUNK, n - k)
        t_left = dt * (k + np.arange(span))
        w1 = np.exp(-rho1 * t_left) * dt
        w2 = np.exp(-rho2 * t_left) * dt
        z = np.empty((span, N))
        for i, rng in enumerate(rngs):
            z[:, i] = rng.standard_normal(span)
        for m in range(span):
            J1 += w1[m] * np.asarray(f1(x), dtype=float)
            J2 += w2[m] * np.asarray(f2(x), dtype=float)
            x = (x + np.asarray(game.mu(x), dtype=float) * dt
                 + np.asarray(game.sigma(x), dtype=float) * sqdt * z[m])
            _settle_vector(x, t_left[m] + dt, J1, J2, game, s1, s2)
        k += span

    def stats(J: np.ndarray) -> tuple[float, float]:
        mean = float(J.mean())
        se = float(J.std(ddof=1) / math.sqrt(N)) if N > 1 else 0.0
        return mean, se

    return stats(J1), stats(J2)


def perturb_strategy(strategy: Strategy, magnitude: float, rng,
                     mode: str = "target") -> Strategy:
    """Randomly rescale a threshold strategy by factors (1 +- magnitude*U).

    The finite endpoints of the (single) continuation interval and the
    impulse destination are each rescaled with an independent draw, U uniform
    on [0, 1] and the sign equiprobable. ``mode='target'`` rescales the
    destination coordinate itself; ``mode='delta'`` rescales the impulse size
    relative to each intervention node. Draws sending a destination outside
    the perturbed continuation region are retried a bounded number of times.
    """
    if not 0.0 <= magnitude < 1.0:
        raise ValueError("magnitude in [0, 1) required")
    if len(strategy.continuation) != 1:
        raise ValueError("perturbation is defined for single-interval threshold strategies")
    if mode not in ("target", "delta"):
        raise ValueError(f"unknown perturbation mode {mode!r}")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)

    lo, hi = strategy.continuation[0]
    for _ in range(100):
        def factor():
            u = rng.uniform(0.0, 1.0)
            sign = 1.0 if rng.uniform(0.0, 1.0) < 0.5 else -1.0
            return 1.0 + sign * magnitude * u

        new_lo = lo if math.isinf(lo) else lo * factor()
        new_hi = hi if math.isinf(hi) else hi * factor()
        if new_lo >= new_hi:
            continue
        scale = factor()
        if mode == "target":
            targets = strategy.intervention_target_x * scale
        else:
            targets = strategy.intervention_x + scale * (strategy.intervention_target_x
                                                         - strategy.intervention_x)
        candidate = Strategy(continuation=((new_lo, new_hi),), node_ranges=(),
                             intervention_x=strategy.intervention_x,
                             intervention_target_x=targets)
        if targets.size == 0 or np.all(candidate.contains(targets)):
            return candidate
    raise RuntimeError("could not draw a perturbation keeping the impulse "
                       "destinations inside the continuation region")
