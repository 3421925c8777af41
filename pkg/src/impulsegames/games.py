"""Two-player impulse game definitions.

A :class:`GameSpec` bundles the coefficients of the uncontrolled diffusion,
the players' discount rates and running payoffs, and the cost/gain structure
of interventions. Three parametric families are provided:

* the linear-payoff game with an analytically solvable Nash equilibrium
  (see :mod:`impulsegames.closed_form`),
* a concave-parabola variant whose unilateral games are well posed,
* a capped-payoff variant used to build initial guesses for the linear game.

All payoff, cost and gain callables must be vectorised over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Pair = tuple[float, float]


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValueError(message)


@dataclass(frozen=True)
class GameSpec:
    """Immutable description of a two-player stochastic impulse game.

    ``cost[i]`` maps ``(x, delta)`` to the signed term added to player i+1's
    objective when she shifts the state by ``delta`` (always negative:
    intervening is never free). ``gain[i]`` is her compensation when the
    opponent intervenes. ``neumann_slopes[i]`` holds the (left, right)
    boundary slopes of her value function, used to close the finite
    difference scheme.
    """

    mu: Callable
    sigma: Callable
    rho: Pair
    running_payoff: tuple[Callable, Callable]
    cost: tuple[Callable, Callable]
    gain: tuple[Callable, Callable]
    neumann_slopes: tuple[Pair, Pair]

    def __post_init__(self):
        _require(self.rho[0] > 0 and self.rho[1] > 0, "discount rates must be positive")

    # 1-based accessors keep call sites close to the usual player numbering.
    def payoff_fn(self, player: int) -> Callable:
        return self.running_payoff[player - 1]

    def cost_fn(self, player: int) -> Callable:
        return self.cost[player - 1]

    def gain_fn(self, player: int) -> Callable:
        return self.gain[player - 1]

    def discount(self, player: int) -> float:
        return self.rho[player - 1]

    def slopes(self, player: int) -> Pair:
        return self.neumann_slopes[player - 1]


def _validate_cost_family(sigma, rho, c, c_tilde, lam, lam_tilde) -> None:
    _require(sigma > 0, "sigma > 0 violated")
    _require(rho > 0, "rho > 0 violated")
    _require(0 <= c_tilde <= c, "0 <= c_tilde <= c violated")
    _require(0 <= lam_tilde <= lam, "0 <= lam_tilde <= lam violated")
    _require((c, lam) != (c_tilde, lam_tilde), "(c, lam) != (c_tilde, lam_tilde) violated")
    _require(1.0 - rho * lam > 0, "1 - rho*lam > 0 violated")


@dataclass(frozen=True)
class BenchmarkParams:
    """Parameters of the linear-payoff game (two agents pushing a price
    towards their own reference levels s1 < s2, symmetric cost/gain rates)."""

    sigma: float
    rho: float
    s1: float
    s2: float
    c: float
    c_tilde: float
    lam: float
    lam_tilde: float

    def __post_init__(self):
        _validate_cost_family(self.sigma, self.rho, self.c, self.c_tilde,
                              self.lam, self.lam_tilde)
        _require(self.s1 < self.s2, "s1 < s2 violated")


@dataclass(frozen=True)
class ParabolicParams:
    """Cost/gain structure as in the linear game, but the running payoff of
    player i is the concave parabola with roots ``roots_i = (left, right)``."""

    sigma: float
    rho: float
    c: float
    c_tilde: float
    lam: float
    lam_tilde: float
    roots1: Pair
    roots2: Pair

    def __post_init__(self):
        _validate_cost_family(self.sigma, self.rho, self.c, self.c_tilde,
                              self.lam, self.lam_tilde)
        for i, (lo, hi) in enumerate((self.roots1, self.roots2), start=1):
            _require(lo < hi, f"roots{i}: left root < right root violated")


@dataclass(frozen=True)
class CappedParams(BenchmarkParams):
    """Linear-payoff game with running payoffs capped at K > 0."""

    K: float = 5.0

    def __post_init__(self):
        super().__post_init__()
        _require(self.K > 0, "K > 0 violated")


def _const_fn(value: float) -> Callable:
    def fn(x):
        return np.full_like(np.asarray(x, dtype=float), value)
    return fn


def _cost_gain(c, c_tilde, lam, lam_tilde):
    def cost(x, delta):
        return -(c + lam * np.abs(delta)) + 0.0 * np.asarray(x, dtype=float)

    def gain(x, delta):
        return c_tilde + lam_tilde * np.abs(delta) + 0.0 * np.asarray(x, dtype=float)

    return cost, gain


def _linear_family_spec(p, f1: Callable, f2: Callable) -> GameSpec:
    cost, gain = _cost_gain(p.c, p.c_tilde, p.lam, p.lam_tilde)
    # Boundary slopes of the value functions under linear costs/gains:
    # intervening on the left gives player 1 slope lam, being compensated on
    # the right gives lam_tilde; mirrored with opposite sign for player 2.
    slopes = ((p.lam, p.lam_tilde), (-p.lam_tilde, -p.lam))
    return GameSpec(
        mu=_const_fn(0.0),
        sigma=_const_fn(p.sigma),
        rho=(p.rho, p.rho),
        running_payoff=(f1, f2),
        cost=(cost, cost),
        gain=(gain, gain),
        neumann_slopes=slopes,
    )


def build_benchmark(params: BenchmarkParams) -> GameSpec:
    """Game with running payoffs f1(x) = x - s1 and f2(x) = s2 - x."""
    s1, s2 = params.s1, params.s2
    return _linear_family_spec(
        params,
        f1=lambda x: np.asarray(x, dtype=float) - s1,
        f2=lambda x: s2 - np.asarray(x, dtype=float),
    )


def build_parabolic(params: ParabolicParams) -> GameSpec:
    """Same cost structure as the linear game, concave-parabola payoffs."""

    def parabola(roots):
        lo, hi = roots
        return lambda x: -(np.asarray(x, dtype=float) - lo) * (np.asarray(x, dtype=float) - hi)

    return _linear_family_spec(params, parabola(params.roots1), parabola(params.roots2))


def build_capped(params: CappedParams) -> GameSpec:
    """Linear-payoff game with payoffs capped at params.K."""
    s1, s2, K = params.s1, params.s2, params.K
    return _linear_family_spec(
        params,
        f1=lambda x: np.minimum(np.asarray(x, dtype=float) - s1, K),
        f2=lambda x: np.minimum(s2 - np.asarray(x, dtype=float), K),
    )
