"""Subcommand implementations behind the ``cascade`` command line.

Each ``cmd_*`` function reads its inputs, runs one module, writes its artefacts
into ``run.out`` and returns the process exit code. Library exceptions are left
to the caller, which maps them to exit codes through ``exit_code``.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import SolverSettings
from .costs import cost_report
from .errors import ConvergenceError, ModelValidationError
from .experiments.figure import render_figure
from .experiments.poa import run_poa
from .experiments.simulation import instances_frame, records_frame, run_simulation
from .liability import (
    LiabilityMatrix,
    PiWeights,
    check_axioms,
    make_disruptor_pays,
    make_own_loss,
    make_phi_star,
    make_pi_solution,
)
from .model.problem import InvestmentProfile, Problem
from .models import PoaConfig, RunConfig, SimConfig, SolveOptions, SolveResult
from .solvers import solve_efficient, solve_equilibrium
from .storage import (
    cost_report_frame,
    dumps_json,
    liability_frame,
    read_liability_matrix,
    read_pi_weights,
    read_problem,
    solve_result_frame,
    write_json,
    write_table,
    write_text,
)
from .tracing import log_event, trace
from .verify import verify_all

_LOGGER = logging.getLogger("commands")

SOLUTION_KINDS = ("phi-star", "disruptor-pays", "own-loss", "pi:<file>", "matrix:<file>")


def solve_options(run: RunConfig, settings: Optional[SolverSettings] = None) -> SolveOptions:
    """Solver settings from file and environment, with ``--tol`` and ``--seed`` applied last."""

    settings = settings or SolverSettings.load()
    return settings.solve_options(tolerance=run.tol, seed=run.seed)


def phi_star_solution(pr: Problem, opts: SolveOptions) -> LiabilityMatrix:
    """First-best solution at the efficient profile.

    Efficient investments that underflow to the corner have ``p = 0``; the
    weight form covers them where :func:`make_phi_star` refuses.
    """

    return phi_star_at(pr, solve_efficient(pr, opts).profile)


def phi_star_at(pr: Problem, x_star: InvestmentProfile) -> LiabilityMatrix:
    """First-best solution built from an already solved efficient profile."""

    if np.all(x_star.x > 0.0):
        return make_phi_star(pr, x_star)
    log_event(_LOGGER, logging.INFO, "commands.phi_star.corners", corners=np.flatnonzero(x_star.x == 0.0) + 1)
    return make_pi_solution(pr.losses, PiWeights(pr.success_probabilities(x_star)))


def resolve_solution(spec: str, pr: Problem, opts: SolveOptions) -> LiabilityMatrix:
    """Turn a solution spec such as ``own-loss`` or ``pi:weights.json`` into a matrix."""

    kind, _, argument = spec.strip().partition(":")
    kind = kind.lower()
    if kind == "phi-star" and not argument:
        return phi_star_solution(pr, opts)
    if kind == "disruptor-pays" and not argument:
        return make_disruptor_pays(pr.losses)
    if kind == "own-loss" and not argument:
        return make_own_loss(pr.losses)
    if kind == "pi" and argument:
        return make_pi_solution(pr.losses, read_pi_weights(Path(argument), pr.n))
    if kind == "matrix" and argument:
        return read_liability_matrix(Path(argument), pr.losses)
    raise ModelValidationError(f"unknown solution spec {spec!r}; expected one of: {', '.join(SOLUTION_KINDS)}")


def _announce(paths: Sequence[Path]) -> None:
    for path in paths:
        print(f"wrote {path}")


# ----------------------------------------------------------------------
# solve
# ----------------------------------------------------------------------
def cmd_solve(problem_file: Path, mode: str, solution_spec: Optional[str], run: RunConfig) -> int:
    """Efficient or equilibrium profile plus the cost report under the chosen solution."""

    opts = solve_options(run)
    pr = read_problem(problem_file)
    pr.require_valid()
    mode = mode.strip().lower()
    if mode not in {"efficient", "equilibrium"}:
        raise ModelValidationError(f"mode must be efficient or equilibrium, got {mode!r}")
    if mode == "equilibrium" and not solution_spec:
        raise ModelValidationError("equilibrium mode needs --solution")

    with trace("commands.solve", logger=_LOGGER, mode=mode, n=pr.n, solution=solution_spec) as span:
        spec = (solution_spec or "phi-star").strip()
        phi: Optional[LiabilityMatrix] = None
        if mode == "equilibrium":
            phi = resolve_solution(spec, pr, opts)
            phi.require_balanced()
        try:
            result = solve_efficient(pr, opts) if phi is None else solve_equilibrium(pr, phi, opts)
        except ConvergenceError as exc:
            if isinstance(exc.partial, SolveResult):
                write_table(solve_result_frame(exc.partial), run.out / "solve_result.csv")
            raise
        if phi is None:
            phi = phi_star_at(pr, result.profile) if spec.lower() == "phi-star" else resolve_solution(spec, pr, opts)
        span.record(converged=result.converged, max_residual=result.max_residual)

        paths = [
            write_table(solve_result_frame(result), run.out / "solve_result.csv"),
            write_table(cost_report_frame(cost_report(pr, phi, result.profile)), run.out / "cost_report.csv"),
        ]
    _announce(paths)
    if not result.converged:
        log_event(_LOGGER, logging.ERROR, "commands.solve.not_converged", max_residual=result.max_residual)
        return ConvergenceError.exit_code
    return 0


# ----------------------------------------------------------------------
# liability
# ----------------------------------------------------------------------
def cmd_liability(problem_file: Path, solution_spec: str, run: RunConfig) -> int:
    """Matrix CSV and axiom audit of a solution; failed axioms are reported, not raised."""

    opts = solve_options(run)
    pr = read_problem(problem_file)
    pr.require_valid()
    with trace("commands.liability", logger=_LOGGER, n=pr.n, solution=solution_spec) as span:
        phi = resolve_solution(solution_spec, pr, opts)
        report = check_axioms(phi)
        span.record(axioms_passed=report.passed)
        paths = [
            write_table(liability_frame(phi), run.out / "liability.csv"),
            write_json(report, run.out / "axioms.json"),
        ]
    _announce(paths)
    return 0


# ----------------------------------------------------------------------
# experiments
# ----------------------------------------------------------------------
def cmd_simulate(cfg: SimConfig, run: RunConfig, svg: bool = False) -> int:
    """Monte Carlo means as CSV, optionally with per-instance rows and the figure."""

    opts = solve_options(run)
    result = run_simulation(cfg, opts)
    paths: List[Path] = [write_table(records_frame(result), run.out / "simulation.csv")]
    if cfg.per_instance:
        paths.append(write_table(instances_frame(result), run.out / "instances.csv"))
    if svg:
        paths.append(write_text(render_figure(result), run.out / "figure.svg"))
    _announce(paths)
    return 0


def cmd_poa(cfg: PoaConfig, run: RunConfig) -> int:
    """Efficiency-loss construction; the JSON goes to ``poa.json`` and stdout."""

    opts = solve_options(run)
    result = run_poa(cfg, opts)
    write_json(result, run.out / "poa.json")
    print(dumps_json(result), end="")
    return 0


# ----------------------------------------------------------------------
# verify
# ----------------------------------------------------------------------
def cmd_verify(sizes: Sequence[int], run: RunConfig, draws: int = 1) -> int:
    """Full verification report; exit 0 only when every check passes."""

    opts = solve_options(run)
    report = verify_all(run.seed, sizes, opts, draws=draws)
    write_json(report.to_list(), run.out / "verify.json")
    write_text(report.to_text(), run.out / "verify.txt")
    print(report.to_text(), end="")
    if not report.passed:
        summary: Dict[str, int] = {"failed": sum(1 for check in report.checks if not check.passed)}
        log_event(_LOGGER, logging.WARNING, "commands.verify.failed", **summary)
        return ConvergenceError.exit_code
    return 0


__all__ = [
    "SOLUTION_KINDS",
    "cmd_liability",
    "cmd_poa",
    "cmd_simulate",
    "cmd_solve",
    "cmd_verify",
    "phi_star_at",
    "phi_star_solution",
    "resolve_solution",
    "solve_options",
]
