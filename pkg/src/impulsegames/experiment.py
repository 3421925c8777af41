"""Config-driven experiment runner.

Reads a flat INI config (sections: game, grid, solver, guess, monte_carlo,
output), runs one solve end to end, and writes machine-readable artifacts:

* ``value_functions.csv`` -- x, V1, V2 (plus exact values and absolute errors
  when the analytic comparison is enabled),
* ``history.csv``         -- sweep index, system residual, relaxation value,
* ``summary.txt``         -- equilibrium, convergence data, key = value style,
* ``monte_carlo.csv``     -- objective estimates and Nash perturbation probes
  (only when the monte_carlo section is present).

Floats are written with 17 significant digits so that reruns under a fixed
config and seed are byte-stable and diffable. Non-convergence is a reported
outcome, not a process failure.
"""

from __future__ import annotations

import configparser
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .closed_form import closed_form, exact_value
from .discretise import Grid, build_grid
from .games import (BenchmarkParams, CappedParams, GameSpec, ParabolicParams,
                    build_benchmark, build_capped, build_parabolic)
from .guesses import staged_benchmark_guess, unilateral_pair
from .howard import HowardConfig
from .montecarlo import SimConfig, estimate_objective, perturb_strategy
from .solver import (SolveResult, SolverConfig, Strategy, extract_equilibrium,
                     solve_system)

logger = logging.getLogger(__name__)

GUESS_MODES = ("zero", "unilateral", "staged-capped")


@dataclass(frozen=True)
class MonteCarloBlock:
    sim: SimConfig
    x0_values: tuple[float, ...]
    perturbation: float = 0.25
    perturbation_draws: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    params: object                   # BenchmarkParams / ParabolicParams / CappedParams
    grid: Grid
    solver: SolverConfig
    guess_mode: str = "zero"
    staged_K: float = 5.0
    staged_capped_guess: str = "zero"
    compare_exact: bool = False
    monte_carlo: MonteCarloBlock | None = None
    output_dir: Path = field(default_factory=lambda: Path("out"))


def _get(section, key, cast, default=None, required=False):
    if key not in section:
        if required:
            raise ValueError(f"missing key '{key}' in section [{section.name}]")
        return default
    raw = section[key]
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError as exc:
        raise ValueError(f"cannot parse {section.name}.{key} = {raw!r}") from exc


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate an experiment config file."""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file {path} not found or unreadable")
    for name in ("game", "grid", "solver", "guess", "output"):
        if name not in parser:
            raise ValueError(f"missing section [{name}] in {path}")

    game_sec = parser["game"]
    family = _get(game_sec, "family", str, required=True).strip().lower()
    common = dict(
        sigma=_get(game_sec, "sigma", float, required=True),
        rho=_get(game_sec, "rho", float, required=True),
        c=_get(game_sec, "c", float, required=True),
        c_tilde=_get(game_sec, "c_tilde", float, required=True),
        lam=_get(game_sec, "lambda", float, required=True),
        lam_tilde=_get(game_sec, "lambda_tilde", float, required=True),
    )
    if family == "benchmark":
        params = BenchmarkParams(s1=_get(game_sec, "s1", float, required=True),
                                 s2=_get(game_sec, "s2", float, required=True), **common)
    elif family == "capped":
        params = CappedParams(s1=_get(game_sec, "s1", float, required=True),
                              s2=_get(game_sec, "s2", float, required=True),
                              K=_get(game_sec, "cap", float, default=5.0), **common)
    elif family == "parabolic":
        params = ParabolicParams(
            roots1=(_get(game_sec, "r1_left", float, required=True),
                    _get(game_sec, "r1_right", float, required=True)),
            roots2=(_get(game_sec, "r2_left", float, required=True),
                    _get(game_sec, "r2_right", float, required=True)), **common)
    else:
        raise ValueError(f"unknown game family {family!r}")

    grid_sec = parser["grid"]
    grid = build_grid(_get(grid_sec, "x_min", float, required=True),
                      _get(grid_sec, "x_max", float, required=True),
                      _get(grid_sec, "m", int, required=True))

    sol_sec = parser["solver"]
    solver = SolverConfig(
        eps=_get(sol_sec, "eps", float, default=1e-8),
        alpha=_get(sol_sec, "alpha", float, default=0.8),
        r0=_get(sol_sec, "r0", float, default=1.0),
        k_max=_get(sol_sec, "k_max", int, default=1000),
        inner=HowardConfig(tol=_get(sol_sec, "inner_tol", float, default=1e-10),
                           k_max=_get(sol_sec, "inner_k_max", int, default=500)),
        gauss_seidel=_get(sol_sec, "gauss_seidel", bool, default=False),
        verbatim_residual=_get(sol_sec, "verbatim_residual", bool, default=False),
        costed_exterior=_get(sol_sec, "costed_exterior", bool, default=True),
    )

    guess_sec = parser["guess"]
    guess_mode = _get(guess_sec, "mode", str, default="zero").strip().lower()
    if guess_mode not in GUESS_MODES:
        raise ValueError(f"guess mode must be one of {GUESS_MODES}, got {guess_mode!r}")
    staged_K = _get(guess_sec, "capped_k", float, default=5.0)
    staged_capped_guess = _get(guess_sec, "capped_guess", str, default="zero").strip().lower()
    if guess_mode == "staged-capped" and family != "benchmark":
        raise ValueError("staged-capped guess applies to the benchmark family only")

    out_sec = parser["output"]
    compare = _get(out_sec, "compare_exact", bool, default=False)
    if compare and family != "benchmark":
        raise ValueError("compare_exact requires the benchmark family")
    output_dir = Path(_get(out_sec, "dir", str, default="out"))

    mc = None
    if "monte_carlo" in parser:
        mc_sec = parser["monte_carlo"]
        x0_raw = _get(mc_sec, "x0", str, default="0.0")
        x0_values = tuple(float(tok) for tok in x0_raw.replace(",", " ").split())
        mc = MonteCarloBlock(
            sim=SimConfig(T=_get(mc_sec, "t", float, default=1000.0),
                          dt=_get(mc_sec, "dt", float, default=1e-3),
                          N=_get(mc_sec, "paths", int, default=200),
                          seed=_get(mc_sec, "seed", int, default=0),
                          x0=x0_values[0]),
            x0_values=x0_values,
            perturbation=_get(mc_sec, "perturbation", float, default=0.25),
            perturbation_draws=_get(mc_sec, "perturbation_draws", int, default=0),
        )

    return ExperimentConfig(family=family, params=params, grid=grid,
                            solver=solver, guess_mode=guess_mode,
                            staged_K=staged_K,
                            staged_capped_guess=staged_capped_guess,
                            compare_exact=compare, monte_carlo=mc,
                            output_dir=output_dir)


def build_game(config: ExperimentConfig) -> GameSpec:
    if config.family == "benchmark":
        return build_benchmark(config.params)
    if config.family == "capped":
        return build_capped(config.params)
    return build_parabolic(config.params)


@dataclass(frozen=True)
class ExactComparison:
    """Sup-norm errors of the value pair and of the extracted equilibrium
    against the closed-form solution."""

    sup_error: tuple[float, float]
    threshold_error: tuple[float, float]
    target_error: tuple[float, float]
    thresholds: tuple[float, float]
    targets: tuple[float, float]
    exact_thresholds: tuple[float, float]
    exact_targets: tuple[float, float]


def compare_to_exact(result: SolveResult, params: BenchmarkParams,
                     eps: float = 1e-8) -> ExactComparison:
    """Errors of a solve against the closed-form solution (benchmark only)."""
    if not isinstance(params, BenchmarkParams) or isinstance(params, CappedParams):
        raise ValueError("exact comparison is only defined for the benchmark family")
    cf = closed_form(params)
    grid = result.grid
    sup = tuple(float(np.abs(result.V[i] - exact_value(grid.x, i + 1, cf)).max())
                for i in (0, 1))
    strategies = extract_equilibrium(result.V, grid, build_benchmark(params), eps)
    # Player 1 intervenes left of the band, player 2 right of it: her finite
    # continuation endpoint is the lower one, the opponent's the upper one.
    thresholds, targets = [], []
    for i, s in enumerate(strategies):
        finite = [b for iv in s.continuation for b in iv if np.isfinite(b)]
        thresholds.append(finite[0] if finite else np.nan)
        targets.append(float(np.median(s.intervention_target_x))
                       if s.intervention_target_x.size else np.nan)
    return ExactComparison(
        sup_error=sup,
        threshold_error=tuple(abs(thresholds[i] - cf.x_bar[i]) for i in (0, 1)),
        target_error=tuple(abs(targets[i] - cf.x_star[i]) for i in (0, 1)),
        thresholds=tuple(thresholds),
        targets=tuple(targets),
        exact_thresholds=cf.x_bar,
        exact_targets=cf.x_star,
    )


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _describe_strategy(s: Strategy) -> str:
    iv = ", ".join(f"({_fmt(lo)}, {_fmt(hi)})" for lo, hi in s.continuation)
    if s.intervention_target_x.size:
        tgt = _fmt(float(np.median(s.intervention_target_x)))
    else:
        tgt = "none"
    return f"continuation {iv}; impulse destination {tgt}"


def run(config: ExperimentConfig, seed_override: int | None = None) -> int:
    """Execute one experiment and write its artifacts. Returns the exit
    status: 0 on success (including reported non-convergence)."""
    game = build_game(config)
    grid = config.grid
    if config.guess_mode == "zero":
        guess = (np.zeros(grid.n), np.zeros(grid.n))
    elif config.guess_mode == "unilateral":
        guess = unilateral_pair(game, grid, config.solver.inner)
    else:
        guess = staged_benchmark_guess(config.params, config.staged_K, grid,
                                       config.solver,
                                       capped_guess=config.staged_capped_guess)

    result = solve_system(game, grid, guess, config.solver)
    logger.info("solve finished: status=%s iterations=%d residual=%.3e",
                result.status, result.iterations,
                result.residual_history[-1] if result.residual_history.size else np.nan)
    strategies = extract_equilibrium(result.V, grid, game, config.solver.eps)

    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)

    comparison = None
    if config.compare_exact:
        comparison = compare_to_exact(result, config.params, config.solver.eps)

    with open(out / "value_functions.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["x", "V1", "V2"]
        rows = [grid.x, result.V[0], result.V[1]]
        if comparison is not None:
            cf = closed_form(config.params)
            ex1 = exact_value(grid.x, 1, cf)
            ex2 = exact_value(grid.x, 2, cf)
            header += ["exact_V1", "exact_V2", "abs_err_1", "abs_err_2"]
            rows += [ex1, ex2, np.abs(result.V[0] - ex1), np.abs(result.V[1] - ex2)]
        writer.writerow(header)
        for k in range(grid.n):
            writer.writerow([_fmt(col[k]) for col in rows])

    with open(out / "history.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "residual", "relaxation"])
        for k in range(result.iterations):
            writer.writerow([k, _fmt(result.residual_history[k]),
                             _fmt(result.relaxation_history[k])])

    mc_lines = []
    if config.monte_carlo is not None:
        mc_lines = _run_monte_carlo(game, grid, result, strategies, config,
                                    seed_override)
        with open(out / "monte_carlo.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kind", "player", "x0", "value", "stderr", "reference"])
            writer.writerows(mc_lines)

    summary = [
        f"family = {config.family}",
        f"grid = [{_fmt(grid.x_min)}, {_fmt(grid.x_max)}], M = {grid.M}",
        f"guess = {config.guess_mode}",
        f"status = {result.status}",
        f"converged = {result.converged}",
        f"iterations = {result.iterations}",
    ]
    if result.residual_history.size:
        summary.append(f"final_residual = {_fmt(result.residual_history[-1])}")
    if result.breakdown is not None:
        b = result.breakdown
        summary.append(f"worst_residual = {_fmt(b.value)} at node {b.worst_node} "
                       f"(x = {_fmt(grid.x[b.worst_node])}, player {b.worst_player}, "
                       f"{b.worst_category} relation)")
    if result.message:
        summary.append(f"note = {result.message}")
    for i, s in enumerate(strategies, start=1):
        summary.append(f"strategy_{i} = {_describe_strategy(s)}")
    if comparison is not None:
        summary.append(f"sup_error = ({_fmt(comparison.sup_error[0])}, "
                       f"{_fmt(comparison.sup_error[1])})")
        summary.append(f"threshold_error = ({_fmt(comparison.threshold_error[0])}, "
                       f"{_fmt(comparison.threshold_error[1])})")
        summary.append(f"target_error = ({_fmt(comparison.target_error[0])}, "
                       f"{_fmt(comparison.target_error[1])})")
    summary.append("domain_note = computational domain is an assumption of this "
                   "config; equilibria must sit well inside it")
    (out / "summary.txt").write_text("\n".join(summary) + "\n")
    return 0


def _run_monte_carlo(game, grid, result, strategies, config, seed_override):
    mc = config.monte_carlo
    seed = mc.sim.seed if seed_override is None else seed_override
    rows = []
    for x0 in mc.x0_values:
        sim = SimConfig(T=mc.sim.T, dt=mc.sim.dt, N=mc.sim.N, seed=seed, x0=x0)
        est = estimate_objective(game, strategies, sim)
        for i in (0, 1):
            v_solver = float(np.interp(x0, grid.x, result.V[i]))
            rows.append(["estimate", i + 1, _fmt(x0), _fmt(est[i][0]),
                         _fmt(est[i][1]), _fmt(v_solver)])
    if mc.perturbation_draws > 0:
        rng = np.random.default_rng(seed)
        for who in (0, 1):
            for draw in range(mc.perturbation_draws):
                pert = perturb_strategy(strategies[who], mc.perturbation, rng)
                pair = (pert, strategies[1]) if who == 0 else (strategies[0], pert)
                sim = SimConfig(T=mc.sim.T, dt=mc.sim.dt, N=mc.sim.N,
                                seed=seed + 1 + draw, x0=mc.x0_values[0])
                est = estimate_objective(game, pair, sim)
                v_solver = float(np.interp(sim.x0, grid.x, result.V[who]))
                rows.append([f"perturbed_{draw}", who + 1, _fmt(sim.x0),
                             _fmt(est[who][0]), _fmt(est[who][1]), _fmt(v_solver)])
    return rows
