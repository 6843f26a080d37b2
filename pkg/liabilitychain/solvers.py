"""Equilibrium and efficient investment profiles.

Both solvers reduce to the same one-dimensional problem: find ``x`` with
``p'(x) * M = 1`` for a multiplier ``M >= 0``. Because ``p'`` is strictly
decreasing the root is unique; it is bracketed by geometric expansion and
polished with Brent's method on ``log p'(e^v) + log M``, which keeps tiny
roots at full relative precision. A root below ``1e-300`` (or ``M = 0``) is
reported as the corner ``x = 0``.
"""

from __future__ import annotations

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .costs import total_cost
from .errors import ConvergenceError, ModelValidationError
from .liability import LiabilityMatrix
from .model.problem import InvestmentProfile, Problem
from .model.technology import Technology
from .models import ProfileComparison, SolveOptions, SolveResult
from .tracing import log_event

_LOGGER = logging.getLogger("solvers")

_LOG_FLOOR = math.log(1e-300)
_LOG_CEILING = math.log(1e300)
_LOG_XTOL = 1e-15
_BRENT_MAXITER = 200
CERTIFICATE_TOLERANCE = 1e-6
MATCH_TOLERANCE = 1e-6


def relative_gap(a: np.ndarray, b: np.ndarray) -> float:
    """Componentwise ``max |a - b| / max(|a|, |b|)``; two zeros have gap 0."""

    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0:
        return 0.0
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b) / scale))


def solve_foc(tech: Technology, multiplier: float, *, growth: float = 2.0, guess: float = 0.0) -> float:
    """Return the investment solving ``p'(x) * multiplier = 1`` (0.0 for the corner)."""

    if not multiplier > 0.0:
        return 0.0
    log_multiplier = math.log(multiplier)

    def excess(v: float) -> float:
        return tech.log_derivative(math.exp(v)) + log_multiplier

    if excess(_LOG_FLOOR) <= 0.0:
        return 0.0

    start = math.log(guess) if guess > 0.0 else 0.0
    start = min(max(start, _LOG_FLOOR), _LOG_CEILING)
    value = excess(start)
    if value == 0.0:
        return math.exp(start)

    step = math.log(growth)
    if value > 0.0:
        lo, hi = start, start + step
        while excess(hi) > 0.0:
            lo = hi
            step *= 2.0
            hi = hi + step
            if hi > _LOG_CEILING:
                raise ConvergenceError(
                    f"no root of p'(x) * {multiplier!r} = 1 below x = 1e300",
                    diagnostics={"family": tech.family, "multiplier": multiplier},
                )
    else:
        lo, hi = start - step, start
        while lo > _LOG_FLOOR and excess(lo) < 0.0:
            hi = lo
            step *= 2.0
            lo = lo - step
        lo = max(lo, _LOG_FLOOR)

    try:
        root = brentq(excess, lo, hi, xtol=_LOG_XTOL, maxiter=_BRENT_MAXITER)
    except (RuntimeError, ValueError) as exc:
        raise ConvergenceError(
            f"one-dimensional root search failed: {exc}",
            diagnostics={"family": tech.family, "multiplier": multiplier, "bracket": [lo, hi]},
        ) from exc
    return math.exp(root)


def _foc_residual(tech: Technology, x: float, multiplier: float) -> float:
    """``1 - p'(x) * M``; genuine corners satisfy complementarity and report 0."""

    if multiplier <= 0.0:
        return 0.0
    if x <= 0.0:
        at_floor = tech.log_derivative(math.exp(_LOG_FLOOR)) + math.log(multiplier)
        return 0.0 if at_floor <= 0.0 else -math.inf
    return 1.0 - math.exp(tech.log_derivative(x) + math.log(multiplier))


def _check_solution(pr: Problem, phi: LiabilityMatrix) -> None:
    if phi.n != pr.n:
        raise ModelValidationError(f"solution covers {phi.n} agents but the problem has {pr.n}")


def _check_problem(pr: Problem) -> None:
    problems: List[str] = []
    if pr.n < 1 or len(pr.technologies) != pr.n:
        problems.append(f"{pr.n} losses but {len(pr.technologies)} technologies")
    if np.any(~np.isfinite(pr.losses)) or np.any(pr.losses <= 0.0):
        problems.append("losses must be positive")
    for i, tech in enumerate(pr.technologies, start=1):
        problems.extend(f"technology {i}: {issue}" for issue in tech.violations())
    if problems:
        raise ModelValidationError("invalid problem", problems)


# ----------------------------------------------------------------------
# Equilibrium
# ----------------------------------------------------------------------
def solve_equilibrium(pr: Problem, phi: LiabilityMatrix, opts: Optional[SolveOptions] = None) -> SolveResult:
    """Unique equilibrium of the game induced by ``phi``, solved front to back.

    Agent ``k`` solves ``p_k'(x_k) * prod_{j<k} p_j(x_j) * phi(k,k) = 1`` given
    the choices of the agents before it. A vanishing multiplier puts agent
    ``k`` at its corner, which in turn zeroes every later multiplier.
    """

    opts = opts or SolveOptions()
    _check_problem(pr)
    _check_solution(pr, phi)

    x = np.zeros(pr.n)
    residuals = np.zeros(pr.n)
    corners: List[int] = []
    reached = 1.0
    for k, tech in enumerate(pr.technologies):
        multiplier = reached * phi.phi[k, k]
        try:
            x[k] = solve_foc(tech, multiplier, growth=opts.bracket_growth)
        except ConvergenceError as exc:
            partial = SolveResult(
                profile=InvestmentProfile(x),
                residuals=residuals,
                converged=False,
                iterations=k,
                tolerance=opts.tolerance,
                corners=corners,
            )
            raise ConvergenceError(
                f"equilibrium solve failed at agent {k + 1}: {exc}",
                partial=partial,
                diagnostics={"agent": k + 1, **exc.diagnostics},
            ) from exc
        if x[k] == 0.0:
            corners.append(k + 1)
        residuals[k] = _foc_residual(tech, x[k], multiplier)
        reached *= tech.value(x[k])

    result = SolveResult(
        profile=InvestmentProfile(x),
        residuals=residuals,
        converged=bool(np.max(np.abs(residuals)) <= opts.tolerance),
        iterations=pr.n,
        tolerance=opts.tolerance,
        corners=corners,
    )
    log_event(
        _LOGGER,
        logging.DEBUG,
        "solver.equilibrium.finish",
        n=pr.n,
        converged=result.converged,
        max_residual=result.max_residual,
        corners=corners,
    )
    return result


def equilibrium_residuals(pr: Problem, phi: LiabilityMatrix, x: InvestmentProfile) -> np.ndarray:
    """Own-investment first-order conditions ``dC_k/dx_k`` at ``x`` (corners report 0)."""

    residuals = np.zeros(pr.n)
    reached = 1.0
    for k, tech in enumerate(pr.technologies):
        residuals[k] = _foc_residual(tech, x[k], reached * phi.phi[k, k])
        reached *= tech.value(x[k])
    return residuals


def best_response_iteration(
    pr: Problem,
    phi: LiabilityMatrix,
    start: InvestmentProfile,
    opts: Optional[SolveOptions] = None,
    damping: float = 0.5,
) -> SolveResult:
    """Damped simultaneous best-response dynamics from ``start``.

    Every agent moves a ``damping`` fraction towards its best response to
    the current profile; corner best responses are taken in full.
    """

    opts = opts or SolveOptions()
    _check_problem(pr)
    _check_solution(pr, phi)
    if not 0.0 < damping <= 1.0:
        raise ModelValidationError(f"damping must lie in (0,1], got {damping!r}")

    x = start.x.copy()
    residuals = equilibrium_residuals(pr, phi, InvestmentProfile(x))
    iterations = 0
    while np.max(np.abs(residuals)) > opts.tolerance and iterations < opts.max_outer_iterations:
        iterations += 1
        probabilities = np.array([tech.value(xi) for tech, xi in zip(pr.technologies, x)])
        reached = np.concatenate(([1.0], np.cumprod(probabilities)[:-1]))
        response = np.array(
            [
                solve_foc(tech, reached[k] * phi.phi[k, k], growth=opts.bracket_growth, guess=x[k])
                for k, tech in enumerate(pr.technologies)
            ]
        )
        x = np.where(response == 0.0, 0.0, (1.0 - damping) * x + damping * response)
        residuals = equilibrium_residuals(pr, phi, InvestmentProfile(x))

    converged = bool(np.max(np.abs(residuals)) <= opts.tolerance)
    log_event(
        _LOGGER,
        logging.DEBUG,
        "solver.best_response.finish",
        iterations=iterations,
        converged=converged,
        damping=damping,
    )
    return SolveResult(
        profile=InvestmentProfile(x),
        residuals=residuals,
        converged=converged,
        iterations=iterations,
        tolerance=opts.tolerance,
        corners=[k + 1 for k in np.flatnonzero(x == 0.0)],
    )


# ----------------------------------------------------------------------
# Efficient profile
# ----------------------------------------------------------------------
def _direct_exposure(pr: Problem, probabilities: np.ndarray) -> np.ndarray:
    """``D_i = l_i + p_{i+1} D_{i+1}``: losses agent ``i`` prevents per unit of reach."""

    exposure = np.empty(pr.n)
    exposure[-1] = pr.losses[-1]
    for i in range(pr.n - 2, -1, -1):
        exposure[i] = pr.losses[i] + probabilities[i + 1] * exposure[i + 1]
    return exposure


def efficient_residuals(pr: Problem, x: np.ndarray) -> np.ndarray:
    """``dC/dx_i`` at ``x`` with corners reporting 0."""

    probabilities = np.array([tech.value(xi) for tech, xi in zip(pr.technologies, x)])
    exposure = _direct_exposure(pr, probabilities)
    residuals = np.zeros(pr.n)
    reached = 1.0
    for i, tech in enumerate(pr.technologies):
        residuals[i] = _foc_residual(tech, x[i], reached * exposure[i])
        reached *= probabilities[i]
    return residuals


def _sweep(pr: Problem, x: np.ndarray, growth: float) -> None:
    """One Gauss-Seidel pass over agents ``1..n``, updating ``x`` in place."""

    probabilities = np.array([tech.value(xi) for tech, xi in zip(pr.technologies, x)])
    # Later agents are untouched while sweeping forward, so one backward pass suffices.
    exposure = _direct_exposure(pr, probabilities)
    reached = 1.0
    for i, tech in enumerate(pr.technologies):
        x[i] = solve_foc(tech, reached * exposure[i], growth=growth, guess=x[i])
        reached *= tech.value(x[i])


def _coordinate_descent(pr: Problem, start: np.ndarray, opts: SolveOptions) -> Tuple[np.ndarray, np.ndarray, int, bool]:
    x = start.copy()
    residuals = np.full(pr.n, np.inf)
    for sweep in range(1, opts.max_outer_iterations + 1):
        _sweep(pr, x, opts.bracket_growth)
        residuals = efficient_residuals(pr, x)
        if np.max(np.abs(residuals)) <= opts.tolerance:
            return x, residuals, sweep, True
    return x, residuals, opts.max_outer_iterations, False


def upper_bound_start(pr: Problem, growth: float = 2.0) -> np.ndarray:
    """Single-agent optima with the whole downstream loss ``L_i``; bounds every stationary point."""

    systemic = np.cumsum(pr.losses[::-1])[::-1]
    return np.array([solve_foc(tech, systemic[i], growth=growth) for i, tech in enumerate(pr.technologies)])


def solve_efficient(pr: Problem, opts: Optional[SolveOptions] = None) -> SolveResult:
    """Minimise the total cost by cyclic coordinate first-order-condition sweeps.

    The first-order map is monotone, so sweeps started from the upper-bound
    profile and from zero converge to the largest and smallest stationary
    points. ``opts.multistart`` seeded random starts are added. The converged
    candidate with the lowest total cost is returned; ``certified`` records
    whether all candidates agree within ``1e-6`` relative.
    """

    opts = opts or SolveOptions()
    _check_problem(pr)

    starts: List[Tuple[str, np.ndarray]] = [
        ("upper", upper_bound_start(pr, opts.bracket_growth)),
        ("zero", np.zeros(pr.n)),
    ]
    if opts.multistart:
        rng = np.random.default_rng(opts.seed)
        systemic = np.cumsum(pr.losses[::-1])[::-1]
        for index in range(opts.multistart):
            starts.append((f"random-{index}", rng.uniform(0.0, systemic)))

    candidates: List[Tuple[str, np.ndarray, np.ndarray, int, float]] = []
    failures: List[str] = []
    last: Optional[Tuple[np.ndarray, np.ndarray, int]] = None
    for label, start in starts:
        x, residuals, sweeps, converged = _coordinate_descent(pr, start, opts)
        last = (x, residuals, sweeps)
        if converged:
            candidates.append((label, x, residuals, sweeps, total_cost(pr, InvestmentProfile(x))))
        else:
            failures.append(label)

    if not candidates:
        assert last is not None
        x, residuals, sweeps = last
        partial = SolveResult(
            profile=InvestmentProfile(x),
            residuals=residuals,
            converged=False,
            iterations=sweeps,
            tolerance=opts.tolerance,
            corners=[i + 1 for i in np.flatnonzero(x == 0.0)],
        )
        raise ConvergenceError(
            f"efficient solve exceeded {opts.max_outer_iterations} sweeps",
            partial=partial,
            diagnostics={"max_residual": float(np.max(np.abs(residuals))), "starts": failures},
        )

    label, best, residuals, sweeps, best_cost = min(candidates, key=lambda item: item[4])
    gap = max(relative_gap(best, other[1]) for other in candidates)
    certified = not failures and gap <= CERTIFICATE_TOLERANCE
    if not certified:
        log_event(
            _LOGGER,
            logging.WARNING,
            "solver.efficient.uncertified",
            chosen=label,
            gap=gap,
            failed_starts=failures,
            costs={item[0]: item[4] for item in candidates},
        )

    result = SolveResult(
        profile=InvestmentProfile(best),
        residuals=residuals,
        converged=True,
        iterations=sweeps,
        tolerance=opts.tolerance,
        corners=[i + 1 for i in np.flatnonzero(best == 0.0)],
        certified=certified,
        certificate_gap=gap,
    )
    log_event(
        _LOGGER,
        logging.DEBUG,
        "solver.efficient.finish",
        n=pr.n,
        sweeps=sweeps,
        total_cost=best_cost,
        certified=certified,
        corners=result.corners,
    )
    return result


def equilibrium_equals_efficient(
    pr: Problem, phi: LiabilityMatrix, opts: Optional[SolveOptions] = None
) -> ProfileComparison:
    """Solve both profiles and compare them componentwise."""

    opts = opts or SolveOptions()
    efficient = solve_efficient(pr, opts).profile
    equilibrium = solve_equilibrium(pr, phi, opts).profile
    gap = relative_gap(equilibrium.x, efficient.x)
    return ProfileComparison(
        matches=gap <= MATCH_TOLERANCE,
        max_gap=gap,
        equilibrium=equilibrium,
        efficient=efficient,
    )


__all__ = [
    "CERTIFICATE_TOLERANCE",
    "MATCH_TOLERANCE",
    "best_response_iteration",
    "efficient_residuals",
    "equilibrium_equals_efficient",
    "equilibrium_residuals",
    "relative_gap",
    "solve_efficient",
    "solve_equilibrium",
    "solve_foc",
    "upper_bound_start",
]
