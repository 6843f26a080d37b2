"""Numerical verification report.

Every equivalence is checked from both sides: the claimed object passes and a
constructed counterexample fails. Problems are drawn from seeded streams with
mixed technology families so each failing check can be reproduced from its
fingerprint ``seed=..;n=..;draw=..``.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np

from .costs import cross_partial_sign, expected_cost, expected_costs, gradient_total, partial_cost, total_cost
from .errors import LiabilityChainError
from .liability import (
    LiabilityMatrix,
    check_axioms,
    make_disruptor_pays,
    make_own_loss,
    make_phi_star,
    make_pi_solution,
    rebalance_indirect,
    recover_pi,
    scale_direct,
)
from .model.problem import InvestmentProfile, Problem, validate_problem
from .model.technology import PowerExponential, SqrtSaturating, Technology
from .models import CheckResult, SolveOptions, VerificationReport
from .solvers import best_response_iteration, relative_gap, solve_efficient, solve_equilibrium
from .tracing import log_event, trace

_LOGGER = logging.getLogger("verify")

DEFAULT_SIZES = (2, 3, 5, 8)
MATCH_TOLERANCE = 1e-6
CONVERSE_TOLERANCE = 1e-4
PERTURBATION = 0.05
CROSS_TOLERANCE = 1e-6
IDENTITY_TOLERANCE = 1e-8
ROUND_TRIP_TOLERANCE = 1e-12
SUPERMODULAR_TOLERANCE = 1e-12
FD_RELATIVE_TOLERANCE = 1e-4
FD_ABSOLUTE_FLOOR = 1e-6
PERTURBATION_SAMPLES = 1000


def problem_generator(seed: int, n: int, draw: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, n, draw])))


def random_technology(rng: np.random.Generator) -> Technology:
    """Square-root or power-exponential curve with randomised parameters."""

    if rng.random() < 0.5:
        return SqrtSaturating(scale=float(rng.uniform(0.5, 2.0)))
    return PowerExponential(
        ceiling=float(rng.uniform(0.8, 0.99)),
        rate=float(rng.uniform(0.5, 2.0)),
        exponent=float(rng.uniform(0.3, 0.7)),
    )


def random_problem(rng: np.random.Generator, n: int) -> Problem:
    losses = rng.uniform(1.0, 100.0, size=n)
    return Problem(losses=losses, technologies=tuple(random_technology(rng) for _ in range(n)))


def random_balanced_solution(rng: np.random.Generator, losses: np.ndarray) -> LiabilityMatrix:
    """Rows of random nonnegative shares scaled to the downstream loss."""

    n = losses.size
    systemic = np.cumsum(losses[::-1])[::-1]
    phi = np.zeros((n, n))
    for i in range(n):
        shares = rng.random(n - i) + 0.05
        phi[i, i:] = systemic[i] * shares / np.sum(shares)
    return LiabilityMatrix(phi=phi, losses=losses)


def mixed_partial_fd(pr: Problem, phi: LiabilityMatrix, x: InvestmentProfile, k: int, i: int) -> float:
    """Four-point central estimate of ``d^2 C_k / dx_i dx_k``."""

    hi = 1e-3 * max(1.0, x[i - 1])
    hk = 1e-3 * max(1.0, x[k - 1])

    def cost(di: float, dk: float) -> float:
        shifted = x.x.copy()
        shifted[i - 1] += di
        shifted[k - 1] += dk
        return expected_cost(pr, phi, InvestmentProfile(shifted), k)

    return (cost(hi, hk) - cost(hi, -hk) - cost(-hi, hk) + cost(-hi, -hk)) / (4.0 * hi * hk)


def _check(name: str, passed: bool, worst: float, tolerance: float, fingerprint: str, detail: str = "") -> CheckResult:
    return CheckResult(
        name=name,
        passed=bool(passed),
        worst_violation=float(worst),
        tolerance=float(tolerance),
        fingerprint=fingerprint,
        detail=detail,
    )


def _guarded(name: str, tolerance: float, fingerprint: str, body: Callable[[], List[CheckResult]]) -> List[CheckResult]:
    """Run ``body``; a library error becomes a failed check instead of aborting the report."""

    try:
        return body()
    except (LiabilityChainError, ArithmeticError) as exc:
        log_event(_LOGGER, logging.WARNING, "verify.check.error", check=name, fingerprint=fingerprint, error=repr(exc))
        return [_check(name, False, math.inf, tolerance, fingerprint, f"{type(exc).__name__}: {exc}")]


# ----------------------------------------------------------------------
# Liability axioms
# ----------------------------------------------------------------------
def verify_axioms(pr: Problem, rng: np.random.Generator, fingerprint: str = "") -> List[CheckResult]:
    """Weight-family round trip, detection of axiom violations and of imbalance."""

    n = pr.n
    pi = rng.random(n)
    constructed = make_pi_solution(pr.losses, pi)
    report = check_axioms(constructed)
    recovered = recover_pi(constructed, strict=True)
    round_trip = float(np.max(np.abs(recovered.pi[1:] - pi[1:]))) if n > 1 else 0.0
    results = [
        _check(
            "axioms.pi_round_trip",
            report.passed and round_trip <= ROUND_TRIP_TOLERANCE,
            round_trip,
            ROUND_TRIP_TOLERANCE,
            fingerprint,
        )
    ]

    for label, reference in (("disruptor_pays", make_disruptor_pays(pr.losses)), ("own_loss", make_own_loss(pr.losses))):
        audit = check_axioms(reference)
        worst = max(audit.balance_violation, audit.higher_direct_violation, audit.independent_violation)
        results.append(_check(f"axioms.{label}", audit.passed, worst, audit.tolerance, fingerprint))

    if n >= 2:
        broken = constructed.phi.copy()
        # All of row 1's losses moved onto agent 2 exceed agent 2's direct liability.
        broken[0, :] = 0.0
        broken[0, 1] = float(np.sum(pr.losses))
        audit = check_axioms(LiabilityMatrix(phi=broken, losses=pr.losses))
        results.append(
            _check(
                "axioms.violation_detected",
                audit.balance and not audit.higher_direct,
                audit.higher_direct_violation,
                audit.tolerance,
                fingerprint,
                "higher direct liability",
            )
        )

    unbalanced = constructed.phi.copy()
    unbalanced[0, :] *= 1.1
    audit = check_axioms(LiabilityMatrix(phi=unbalanced, losses=pr.losses))
    located = any(entry.startswith("row 1: unbalanced") for entry in audit.located)
    results.append(
        _check(
            "axioms.balance_detected",
            not audit.balance and located,
            audit.balance_violation,
            audit.tolerance,
            fingerprint,
            "; ".join(audit.located[:1]),
        )
    )
    return results


# ----------------------------------------------------------------------
# First-best implementation
# ----------------------------------------------------------------------
def _converse_perturbation(phi_star: LiabilityMatrix) -> tuple[LiabilityMatrix, int, float]:
    """+5% on the first row able to absorb it, else -5% on row 1."""

    for row in range(1, phi_star.n):
        try:
            return scale_direct(phi_star, row, 1.0 + PERTURBATION), row, 1.0 + PERTURBATION
        except LiabilityChainError:
            continue
    return scale_direct(phi_star, 1, 1.0 - PERTURBATION), 1, 1.0 - PERTURBATION


def verify_first_best(
    pr: Problem,
    tol: float = MATCH_TOLERANCE,
    opts: Optional[SolveOptions] = None,
    fingerprint: str = "",
) -> List[CheckResult]:
    """The first-best solution implements the efficient profile; a perturbed diagonal does not."""

    opts = opts or SolveOptions()
    x_star = solve_efficient(pr, opts).profile
    phi_star = make_phi_star(pr, x_star)

    forward = relative_gap(solve_equilibrium(pr, phi_star, opts).profile.x, x_star.x)
    results = [_check("first_best.forward", forward <= tol, forward, tol, fingerprint)]

    if pr.n >= 2:
        shares = np.zeros(pr.n - 1)
        shares[-1] = 1.0
        rebalanced = rebalance_indirect(phi_star, 1, shares)
        gap = relative_gap(solve_equilibrium(pr, rebalanced, opts).profile.x, x_star.x)
        results.append(_check("first_best.rebalanced", gap <= tol, gap, tol, fingerprint, "row 1 indirect moved to agent n"))

        perturbed, row, factor = _converse_perturbation(phi_star)
        x_perturbed = solve_equilibrium(pr, perturbed, opts).profile
        gap = relative_gap(x_perturbed.x, x_star.x)
        shift = x_perturbed[row - 1] - x_star[row - 1]
        direction_ok = (shift > 0.0) == (factor > 1.0)
        results.append(
            _check(
                "first_best.converse",
                gap > CONVERSE_TOLERANCE and direction_ok,
                gap,
                CONVERSE_TOLERANCE,
                fingerprint,
                f"phi({row},{row}) scaled by {factor:g}",
            )
        )
    else:
        results.append(_check("first_best.converse", True, 0.0, CONVERSE_TOLERANCE, fingerprint, "n = 1: balance fixes phi(1,1)"))
    return results


# ----------------------------------------------------------------------
# Cross effects
# ----------------------------------------------------------------------
def _max_cross_effect(pr: Problem, phi: LiabilityMatrix, x: InvestmentProfile) -> float:
    worst = 0.0
    for k in range(1, pr.n + 1):
        for i in range(1, k + 1):
            if x[i - 1] > 0.0:
                worst = max(worst, abs(partial_cost(pr, phi, x, k, i)))
    return worst


def verify_cross_effects(
    pr: Problem,
    tol: float = CROSS_TOLERANCE,
    opts: Optional[SolveOptions] = None,
    fingerprint: str = "",
) -> List[CheckResult]:
    """At the efficient profile every ``dC_k/dx_i`` (``i <= k``) vanishes only under ``phi*``."""

    opts = opts or SolveOptions()
    x_star = solve_efficient(pr, opts).profile
    phi_star = make_phi_star(pr, x_star)
    worst = _max_cross_effect(pr, phi_star, x_star)
    results = [_check("cross_effects.phi_star", worst <= tol, worst, tol, fingerprint)]

    if pr.n >= 3:
        shares = np.zeros(pr.n - 1)
        shares[-1] = 1.0
        alternative = rebalance_indirect(phi_star, 1, shares)
        violation = _max_cross_effect(pr, alternative, x_star)
        results.append(
            _check(
                "cross_effects.rebalanced",
                violation > 10.0 * tol,
                violation,
                10.0 * tol,
                fingerprint,
                "row 1 indirect moved to agent n",
            )
        )
    else:
        results.append(
            _check("cross_effects.rebalanced", True, 0.0, 10.0 * tol, fingerprint, f"n = {pr.n}: phi* is the only balanced first-best solution")
        )
    return results


# ----------------------------------------------------------------------
# Supermodularity
# ----------------------------------------------------------------------
def verify_supermodularity(
    pr: Problem,
    samples: int = 20,
    rng: Optional[np.random.Generator] = None,
    fingerprint: str = "",
) -> List[CheckResult]:
    """Cross partials are nonpositive and agree with finite differences."""

    rng = rng or np.random.default_rng(0)
    worst_sign = -math.inf
    worst_error = 0.0
    zero_row_ok = True
    for sample in range(samples):
        x = InvestmentProfile(rng.uniform(0.5, 3.0, size=pr.n))
        phi = random_balanced_solution(rng, pr.losses)
        if sample == 0 and pr.n >= 2:
            # A row whose disruptor pays nothing directly.
            matrix = phi.phi.copy()
            row = pr.n - 2
            matrix[row, row + 1:] += matrix[row, row] / (pr.n - row - 1)
            matrix[row, row] = 0.0
            phi = LiabilityMatrix(phi=matrix, losses=pr.losses)
            for i in range(1, row + 1):
                zero_row_ok = zero_row_ok and cross_partial_sign(pr, phi, x, row + 1, i) == 0.0
        for k in range(2, pr.n + 1):
            for i in range(1, k):
                analytic = cross_partial_sign(pr, phi, x, k, i)
                numeric = mixed_partial_fd(pr, phi, x, k, i)
                worst_sign = max(worst_sign, analytic)
                error = abs(analytic - numeric) - FD_RELATIVE_TOLERANCE * abs(analytic)
                worst_error = max(worst_error, error)

    if worst_sign == -math.inf:
        worst_sign = 0.0
    return [
        _check(
            "supermodularity.sign",
            worst_sign <= SUPERMODULAR_TOLERANCE and zero_row_ok,
            max(worst_sign, 0.0),
            SUPERMODULAR_TOLERANCE,
            fingerprint,
            f"{samples} samples",
        ),
        _check(
            "supermodularity.finite_difference",
            worst_error <= FD_ABSOLUTE_FLOOR,
            worst_error,
            FD_ABSOLUTE_FLOOR,
            fingerprint,
            f"relative {FD_RELATIVE_TOLERANCE:g} plus absolute floor",
        ),
    ]


# ----------------------------------------------------------------------
# Equilibrium cost identity and efficiency certificate
# ----------------------------------------------------------------------
def verify_equilibrium_identity(
    pr: Problem,
    tol: float = IDENTITY_TOLERANCE,
    opts: Optional[SolveOptions] = None,
    fingerprint: str = "",
) -> List[CheckResult]:
    """``C_j(x*; phi*) = phi*(i,j) + x*_j`` for ``j >= 2`` and any ``i < j``."""

    opts = opts or SolveOptions()
    x_star = solve_efficient(pr, opts).profile
    phi_star = make_phi_star(pr, x_star)
    costs = expected_costs(pr, phi_star, x_star)
    scale = tol * pr.total_loss
    worst = 0.0
    for j in range(1, pr.n):
        for i in range(j):
            worst = max(worst, abs(costs[j] - phi_star.phi[i, j] - x_star[j]))
    first = abs(costs[0] - (pr.technologies[0].complement(x_star[0]) * phi_star.phi[0, 0] + x_star[0]))
    worst = max(worst, first)
    return [_check("equilibrium_identity", worst <= scale, worst, scale, fingerprint)]


def verify_efficiency(
    pr: Problem,
    opts: Optional[SolveOptions] = None,
    rng: Optional[np.random.Generator] = None,
    samples: int = PERTURBATION_SAMPLES,
    fingerprint: str = "",
) -> List[CheckResult]:
    """Vanishing gradient, positivity and no cheaper random perturbation."""

    opts = opts or SolveOptions()
    rng = rng or np.random.default_rng(0)
    result = solve_efficient(pr, opts)
    x_star = result.profile
    gradient_bound = 1e-8 * pr.total_loss
    gradient = float(np.max(np.abs(gradient_total(pr, x_star)))) if not result.corners else math.inf
    best = total_cost(pr, x_star)
    worst_gain = 0.0
    for _ in range(samples):
        noise = rng.uniform(-0.05, 0.05, size=pr.n) * np.maximum(x_star.x, 1e-3)
        trial = InvestmentProfile(np.clip(x_star.x + noise, 0.0, None))
        worst_gain = max(worst_gain, best - total_cost(pr, trial))
    slack = 1e-12 * pr.total_loss
    return [
        _check("efficient.gradient", gradient <= gradient_bound and not result.corners, gradient, gradient_bound, fingerprint),
        _check("efficient.perturbation", worst_gain <= slack, worst_gain, slack, fingerprint, f"{samples} perturbations"),
        _check(
            "efficient.multistart",
            bool(result.certified),
            result.certificate_gap or 0.0,
            1e-6,
            fingerprint,
            f"{opts.multistart} random starts",
        ),
    ]


def verify_best_response(
    pr: Problem,
    rng: np.random.Generator,
    opts: Optional[SolveOptions] = None,
    starts: int = 3,
    fingerprint: str = "",
) -> List[CheckResult]:
    """Damped best-response dynamics reach the front-to-back equilibrium."""

    opts = opts or SolveOptions()
    phi = make_pi_solution(pr.losses, rng.random(pr.n))
    target = solve_equilibrium(pr, phi, opts).profile
    worst = 0.0
    for _ in range(starts):
        start = InvestmentProfile(rng.uniform(0.0, pr.total_loss, size=pr.n))
        reached = best_response_iteration(pr, phi, start, opts).profile
        worst = max(worst, relative_gap(reached.x, target.x))
    return [_check("equilibrium.best_response", worst <= MATCH_TOLERANCE, worst, MATCH_TOLERANCE, fingerprint, f"{starts} starts")]


# ----------------------------------------------------------------------
# Aggregate report
# ----------------------------------------------------------------------
def verify_problem(
    pr: Problem,
    rng: np.random.Generator,
    opts: Optional[SolveOptions] = None,
    fingerprint: str = "",
    samples: int = 20,
) -> List[CheckResult]:
    """Run every check on one problem in a fixed order."""

    opts = opts or SolveOptions()
    checks: List[CheckResult] = []
    problems = validate_problem(pr)
    checks.append(_check("model.validate", not problems, float(len(problems)), 0.0, fingerprint, "; ".join(problems[:3])))
    checks += _guarded("axioms", ROUND_TRIP_TOLERANCE, fingerprint, lambda: verify_axioms(pr, rng, fingerprint))
    checks += _guarded("first_best", MATCH_TOLERANCE, fingerprint, lambda: verify_first_best(pr, MATCH_TOLERANCE, opts, fingerprint))
    checks += _guarded("cross_effects", CROSS_TOLERANCE, fingerprint, lambda: verify_cross_effects(pr, CROSS_TOLERANCE, opts, fingerprint))
    checks += _guarded("supermodularity", SUPERMODULAR_TOLERANCE, fingerprint, lambda: verify_supermodularity(pr, samples, rng, fingerprint))
    checks += _guarded(
        "equilibrium_identity", IDENTITY_TOLERANCE, fingerprint, lambda: verify_equilibrium_identity(pr, IDENTITY_TOLERANCE, opts, fingerprint)
    )
    checks += _guarded("efficient", 1e-8, fingerprint, lambda: verify_efficiency(pr, opts, rng, fingerprint=fingerprint))
    checks += _guarded("equilibrium", MATCH_TOLERANCE, fingerprint, lambda: verify_best_response(pr, rng, opts, fingerprint=fingerprint))
    return checks


def verify_all(
    seed: int,
    sizes: Sequence[int] = DEFAULT_SIZES,
    opts: Optional[SolveOptions] = None,
    draws: int = 1,
) -> VerificationReport:
    """Verify every check on ``draws`` seeded random problems per size."""

    opts = opts or SolveOptions()
    report = VerificationReport()
    with trace("verify.all", logger=_LOGGER, seed=seed, sizes=list(sizes), draws=draws) as span:
        for n in sizes:
            for draw in range(draws):
                fingerprint = f"seed={seed};n={n};draw={draw}"
                rng = problem_generator(seed, n, draw)
                pr = random_problem(rng, n)
                report.checks.extend(verify_problem(pr, rng, opts, fingerprint))
        span.record(checks=len(report.checks), passed=report.passed)
    failed = [check.name for check in report.checks if not check.passed]
    log_event(_LOGGER, logging.INFO, "verify.summary", checks=len(report.checks), failed=failed)
    return report


def parse_sizes(text: str | Iterable[int]) -> List[int]:
    """Parse ``"2,3,5"`` into agent counts."""

    if not isinstance(text, str):
        return [int(value) for value in text]
    sizes = [int(token) for token in text.split(",") if token.strip()]
    if not sizes or any(size < 1 for size in sizes):
        raise ValueError(f"sizes must be positive integers, got {text!r}")
    return sizes


__all__ = [
    "CROSS_TOLERANCE",
    "DEFAULT_SIZES",
    "mixed_partial_fd",
    "parse_sizes",
    "problem_generator",
    "random_balanced_solution",
    "random_problem",
    "verify_all",
    "verify_axioms",
    "verify_best_response",
    "verify_cross_effects",
    "verify_efficiency",
    "verify_equilibrium_identity",
    "verify_first_best",
    "verify_problem",
    "verify_supermodularity",
]
