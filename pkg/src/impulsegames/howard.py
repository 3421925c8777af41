"""Policy iteration for a single discrete quasi-variational inequality.

Solves max{ L V + g, max_y B^y V - V } = 0 on a subgrid, where L is a
(negated) strictly diagonally dominant M-operator and B^y V(x) is the value
of jumping to destination y, floored by the contribution of frozen exterior
destinations. Each iteration classifies every node as a PDE row or an
obstacle row, assembles the corresponding tridiagonal system and solves it
directly; obstacle rows are identity rows with the obstacle value on the
right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .discretise import SubProblem


@dataclass(frozen=True)
class HowardConfig:
    """Tolerance on the sup-norm of consecutive iterates and iteration cap.

    The tolerance should sit strictly below the outer system tolerance; the
    pointwise residuals are checked again at the system level afterwards.
    """

    tol: float = 1e-10
    k_max: int = 500

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol > 0 required")
        if self.k_max < 1:
            raise ValueError("k_max >= 1 required")


@dataclass(frozen=True, eq=False)
class HowardResult:
    values: np.ndarray
    iterations: int
    final_step_norm: float
    policy: np.ndarray          # 1 where the obstacle row was active at exit
    converged: bool


def _matvec(bands: np.ndarray, v: np.ndarray) -> np.ndarray:
    lower, diag, upper = bands
    out = diag * v
    out[:-1] += upper[:-1] * v[1:]
    out[1:] += lower[1:] * v[:-1]
    return out


def _obstacle(problem: SubProblem, v: np.ndarray) -> np.ndarray:
    best = (v[None, :] + problem.cost).max(axis=1)
    return np.maximum(best, problem.obstacle_floor)


def solve_howard(problem: SubProblem, v0: np.ndarray, config: HowardConfig) -> HowardResult:
    """Iterate policy improvement / direct solve until the step norm drops
    below the tolerance. Hitting the iteration cap flags the result as
    unconverged but is not an error."""
    v = np.asarray(v0, dtype=float).copy()
    m = problem.g.size
    if v.shape != (m,):
        raise ValueError(f"initial guess of shape {v.shape} does not match subgrid size {m}")
    if not np.all(np.isfinite(v)):
        raise ValueError("initial guess must be finite")

    lower, diag, upper = problem.bands
    policy = np.zeros(m, dtype=bool)
    step = np.inf
    iterations = 0
    converged = False
    for _ in range(config.k_max):
        obstacle = _obstacle(problem, v)
        pde_residual = _matvec(problem.bands, v) + problem.g
        policy = pde_residual < (obstacle - v)

        diag_k = np.where(policy, -1.0, diag)
        lower_k = np.where(policy, 0.0, lower)
        upper_k = np.where(policy, 0.0, upper)
        rhs = np.where(policy, -obstacle, -problem.g)
        ab = np.zeros((3, m))
        ab[0, 1:] = upper_k[:-1]
        ab[1, :] = diag_k
        ab[2, :-1] = lower_k[1:]
        try:
            v_new = solve_banded((1, 1), ab, rhs, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(f"singular policy system at iteration {iterations}") from exc

        step = float(np.abs(v_new - v).max())
        v = v_new
        iterations += 1
        if step <= config.tol:
            converged = True
            break

    return HowardResult(values=v, iterations=iterations, final_step_norm=step,
                        policy=policy.astype(np.int8), converged=converged)


def qvi_residual(problem: SubProblem, values: np.ndarray) -> float:
    """Sup-norm of max{ L V + g, obstacle - V } over the subgrid."""
    v = np.asarray(values, dtype=float)
    pde = _matvec(problem.bands, v) + problem.g
    obs = _obstacle(problem, v) - v
    return float(np.abs(np.maximum(pde, obs)).max())
