"""Closed-form value functions and equilibrium of the linear-payoff game.

The solution is driven by a handful of constants: the midpoint of the
reference prices, the exponential rate of the homogeneous ODE solutions, and
a scalar root xi of a strictly decreasing transcendental function. From these
the intervention thresholds (x_bar), the impulse destinations (x_star) and
the coefficients of the middle ODE branch follow in closed form. Player 2's
value is piecewise: a compensation branch on the left of the band, the ODE
branch inside, a cost branch on the right; player 1's value is the mirror
image through the midpoint.

Used as the exactness oracle for the numerical solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .games import BenchmarkParams


def _root_fn(y: float, eta: float, theta: float, c: float) -> float:
    return 2.0 * y - eta * math.log((eta + y) / (eta - y)) + theta * c


def _root_fn_prime(y: float, eta: float) -> float:
    return 2.0 - 2.0 * eta**2 / (eta**2 - y**2)


def solve_xi(eta: float, theta: float, c: float, tol: float = 1e-12) -> float:
    """Unique zero in (0, eta) of F(y) = 2y - eta*log((eta+y)/(eta-y)) + theta*c.

    F(0+) = theta*c > 0, F -> -inf at eta, and F' < 0 on (0, eta), so a
    bracketing bisection always succeeds; a few Newton steps polish the root.
    """
    if eta <= 0 or theta <= 0 or tol <= 0:
        raise ValueError("eta > 0, theta > 0 and tol > 0 required")
    if c < 0:
        raise ValueError("c >= 0 required")
    if c == 0:
        raise ValueError("c = 0 puts the root on the boundary of (0, eta); "
                         "a strictly positive fixed cost is required")

    lo = 0.0
    hi = eta * (1.0 - 1e-3)
    while _root_fn(hi, eta, theta, c) >= 0.0:
        hi = eta - (eta - hi) * 1e-3
        if eta - hi < eta * 1e-15:
            raise ValueError("failed to bracket the root of F below eta")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _root_fn(mid, eta, theta, c) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * eta:
            break
    xi = 0.5 * (lo + hi)
    for _ in range(8):
        f = _root_fn(xi, eta, theta, c)
        step = f / _root_fn_prime(xi, eta)
        xi_new = xi - step
        if not lo <= xi_new <= hi:
            break
        xi = xi_new
        if abs(step) <= 1e-17 * eta:
            break
    if abs(_root_fn(xi, eta, theta, c)) > tol:
        raise ValueError(f"root refinement stalled: |F(xi)| = {abs(_root_fn(xi, eta, theta, c)):.3e} > {tol:.1e}")
    return xi


@dataclass(frozen=True)
class BenchmarkClosedForm:
    """Constants of the exact solution, thresholds and impulse targets."""

    params: BenchmarkParams
    s_tilde: float
    theta: float
    eta: float
    xi: float
    Gamma: float
    A1: float
    A2: float
    x_bar: tuple[float, float]
    x_star: tuple[float, float]

    def middle(self, x):
        """ODE branch A1*exp(theta*x) + A2*exp(-theta*x) + (s2 - x)/rho."""
        x = np.asarray(x, dtype=float)
        p = self.params
        return (self.A1 * np.exp(self.theta * x) + self.A2 * np.exp(-self.theta * x)
                + (p.s2 - x) / p.rho)


def closed_form(params: BenchmarkParams, tol: float = 1e-12) -> BenchmarkClosedForm:
    """Compute every constant of the exact solution for ``params``.

    The threshold/target ordering x_bar_1 < x_star_i < x_bar_2 is checked
    numerically on construction; parameter sets without a (computable)
    equilibrium of this shape are rejected.
    """
    p = params
    s_tilde = 0.5 * (p.s1 + p.s2)
    theta = math.sqrt(2.0 * p.rho / p.sigma**2)
    eta = (1.0 - p.lam * p.rho) / p.rho
    xi = solve_xi(eta, theta, p.c, tol)

    Gamma = (theta * (p.c - p.c_tilde) / (4.0 * xi)
             + theta * p.c * (p.lam - p.lam_tilde) / (4.0 * eta * xi)
             + (p.lam - p.lam_tilde) / (2.0 * eta))
    if Gamma < 0:
        raise ValueError(f"negative Gamma = {Gamma!r}; parameters admit no equilibrium of this form")
    if eta**2 - xi**2 <= 0:
        raise ValueError("eta^2 - xi^2 <= 0: root refinement left the admissible interval")

    sq_gp1 = math.sqrt(Gamma + 1.0)
    sq_g = math.sqrt(Gamma)
    ratio = math.sqrt((eta + xi) / (eta - xi))
    log_bar = math.log(ratio * (sq_gp1 + sq_g))
    log_star = math.log((sq_gp1 + sq_g) / ratio)
    x_bar = (s_tilde - log_bar / theta, s_tilde + log_bar / theta)
    x_star = (s_tilde - log_star / theta, s_tilde + log_star / theta)

    amp = math.sqrt(eta**2 - xi**2) / (2.0 * theta)
    A1 = math.exp(-theta * s_tilde) * amp * (sq_gp1 - sq_g)
    A2 = math.exp(theta * s_tilde) * amp * (-sq_gp1 - sq_g)

    cf = BenchmarkClosedForm(params=p, s_tilde=s_tilde, theta=theta, eta=eta,
                             xi=xi, Gamma=Gamma, A1=A1, A2=A2,
                             x_bar=x_bar, x_star=x_star)
    lo, hi = min(x_star), max(x_star)
    if not (x_bar[0] < lo and hi < x_bar[1]):
        raise ValueError(f"impulse targets {x_star} fall outside the band {x_bar}")
    return cf


def exact_value(x, player: int, cf: BenchmarkClosedForm):
    """Exact value function of ``player`` at ``x`` (scalar or array).

    Player 2: compensation branch left of the band, ODE branch inside, cost
    branch right of it. Player 1 is the reflection through the midpoint.
    """
    x_arr = np.asarray(x, dtype=float)
    if player == 1:
        out = _value2(2.0 * cf.s_tilde - x_arr, cf)
    elif player == 2:
        out = _value2(x_arr, cf)
    else:
        raise ValueError("player must be 1 or 2")
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def _value2(x: np.ndarray, cf: BenchmarkClosedForm) -> np.ndarray:
    p = cf.params
    xb1, xb2 = cf.x_bar
    # Left of the band player 1 pushes the state to x_star[0] and player 2 is
    # compensated; right of it player 2 intervenes herself, jumping to
    # x_star[1] at her own cost.
    y1, y2 = cf.x_star
    left = cf.middle(y1) + p.c_tilde + p.lam_tilde * (y1 - x)
    right = cf.middle(y2) - p.c - p.lam * (x - y2)
    return np.select([x <= xb1, x >= xb2], [left, right], default=cf.middle(x))
