"""Efficiency loss of the disruptor-pays rule.

The construction uses losses ``(eps, ..., eps, 1)`` and one technology whose
value at ``1 - eps`` is ``1 - delta`` with ``(1 - delta) ** (n + 1) = 1 - eps``
and whose slope there lies strictly inside
``((1 - delta) ** 2 / (1 - eps), (1 - delta) / (1 - eps))``. Under
disruptor-pays every agent then invests more than ``1 - eps`` while the
efficient total cost stays below the sum of the losses, so the ratio of
total costs exceeds ``n (1 - eps) / (1 + (n - 1) eps)``.
"""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np

from ..costs import total_cost
from ..errors import CalibrationError
from ..liability import LiabilityMatrix, PiWeights, make_disruptor_pays, make_pi_solution
from ..model.problem import Problem
from ..model.technology import SoftCappedLinear, shape_violations
from ..models import EfficiencyLoss, PoaConfig, PoaResult, SolveOptions
from ..solvers import solve_efficient, solve_equilibrium
from ..tracing import log_event, trace

_LOGGER = logging.getLogger("experiments.poa")

_TARGET_TOLERANCE = 1e-10


def poa_delta(n: int, epsilon: float) -> float:
    """``delta`` with ``(1 - delta) ** (n + 1) = 1 - epsilon``."""

    return -math.expm1(math.log1p(-epsilon) / (n + 1))


def derivative_band(n: int, epsilon: float) -> tuple[float, float]:
    """Open interval the slope at ``1 - epsilon`` has to fall into."""

    delta = poa_delta(n, epsilon)
    return (1.0 - delta) ** 2 / (1.0 - epsilon), (1.0 - delta) / (1.0 - epsilon)


def calibrate_poa_technology(n: int, epsilon: float) -> SoftCappedLinear:
    """Technology hitting ``p(1 - eps) = 1 - delta`` with the slope at the band's geometric midpoint.

    The required elasticity ``r = (1 - eps) p' / p = sqrt(1 - delta)`` is split
    evenly between the ramp and the cap: the bump sets the ramp's elasticity to
    ``sqrt(r)``, the sharpness sets the cap's, and the rate places the value.
    """

    if n < 1 or not (math.isfinite(epsilon) and 0.0 < epsilon < 1.0):
        raise CalibrationError(f"need n >= 1 and epsilon in (0,1), got n={n!r}, epsilon={epsilon!r}")

    x0 = 1.0 - epsilon
    delta = poa_delta(n, epsilon)
    target = 1.0 - delta
    ceiling = 1.0 - delta / 2.0
    # 1 - sqrt(r) with sqrt(r) = (1 - delta) ** (1/4)
    shortfall = -math.expm1(0.25 * math.log1p(-delta))
    root_r = 1.0 - shortfall
    log_target_over_ceiling = math.log1p(-delta) - math.log1p(-delta / 2.0)

    try:
        z = shortfall / (root_r - 0.5)
        bump = z * math.sqrt(x0)
        sharpness = math.log(shortfall) / log_target_over_ceiling
        log_ramp = math.log(ceiling) - math.log(math.expm1(-sharpness * log_target_over_ceiling)) / sharpness
        rate = (x0 + bump * math.sqrt(x0)) / math.exp(log_ramp)
        tech = SoftCappedLinear(ceiling=ceiling, rate=rate, bump=bump, sharpness=sharpness)
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise CalibrationError(
            f"calibration for n={n}, epsilon={epsilon} broke down ({exc}); try a larger epsilon",
            diagnostics={"n": n, "epsilon": epsilon, "delta": delta},
        ) from exc

    if not tech.is_valid:
        raise CalibrationError(
            f"calibration for n={n}, epsilon={epsilon} produced invalid parameters; try a larger epsilon",
            diagnostics={"violations": tech.violations(), "delta": delta},
        )

    value = tech.value(x0)
    slope = tech.derivative(x0)
    low, high = derivative_band(n, epsilon)
    diagnostics = {"delta": delta, "value": value, "slope": slope, "band": [low, high], **tech.params()}
    if abs(value - target) > _TARGET_TOLERANCE:
        raise CalibrationError(
            f"calibrated value misses 1 - delta by {value - target!r}; try a larger epsilon",
            diagnostics=diagnostics,
        )
    if not low < slope < high:
        raise CalibrationError(
            "calibrated slope left the admissible band (floating-point collapse); try a larger epsilon",
            diagnostics=diagnostics,
        )
    log_event(_LOGGER, logging.DEBUG, "poa.calibrated", n=n, epsilon=epsilon, **diagnostics)
    return tech


def poa_problem(cfg: PoaConfig, tech: Optional[SoftCappedLinear] = None) -> Problem:
    tech = tech or calibrate_poa_technology(cfg.n, cfg.epsilon)
    losses = np.full(cfg.n, cfg.epsilon)
    losses[-1] = 1.0
    return Problem(losses=losses, technologies=(tech,) * cfg.n)


def efficiency_loss(pr: Problem, phi: LiabilityMatrix, opts: Optional[SolveOptions] = None) -> EfficiencyLoss:
    """Compare the equilibrium under ``phi`` with the efficient profile."""

    opts = opts or SolveOptions()
    x_star = solve_efficient(pr, opts).profile
    x_tilde = solve_equilibrium(pr, phi, opts).profile
    c_equilibrium = total_cost(pr, x_tilde)
    c_efficient = total_cost(pr, x_star)
    scale = np.maximum(np.maximum(x_tilde.x, x_star.x), 1e-300)
    relative = (x_tilde.x - x_star.x) / scale
    return EfficiencyLoss(
        ratio=c_equilibrium / c_efficient,
        absolute_gap=c_equilibrium - c_efficient,
        c_equilibrium=c_equilibrium,
        c_efficient=c_efficient,
        overinvesting=[i + 1 for i in np.flatnonzero(relative > opts.tolerance)],
        underinvesting=[i + 1 for i in np.flatnonzero(relative < -opts.tolerance)],
    )


def run_poa(cfg: PoaConfig, opts: Optional[SolveOptions] = None) -> PoaResult:
    """Build the calibrated chain, solve both profiles and certify the ratio."""

    opts = opts or SolveOptions()
    with trace("poa.run", logger=_LOGGER, n=cfg.n, epsilon=cfg.epsilon) as span:
        tech = calibrate_poa_technology(cfg.n, cfg.epsilon)
        violations = shape_violations(tech)
        if violations:
            raise CalibrationError("calibrated technology fails the shape checks", diagnostics={"violations": violations})
        pr = poa_problem(cfg, tech)

        x_hat = solve_equilibrium(pr, make_disruptor_pays(pr.losses), opts).profile
        x_star = solve_efficient(pr, opts).profile
        # Downstream efficient investments underflow to exact zeros, so phi*
        # is built from the weights directly instead of the positive-profile path.
        phi_star = make_pi_solution(pr.losses, PiWeights(pr.success_probabilities(x_star)))
        x_check = solve_equilibrium(pr, phi_star, opts).profile

        c_hat = total_cost(pr, x_hat)
        c_star = total_cost(pr, x_star)
        ratio = c_hat / c_star
        certified = bool(np.all(x_hat.x > 1.0 - cfg.epsilon)) and c_star < 1.0 + (cfg.n - 1) * cfg.epsilon
        span.record(ratio=ratio, certified=certified)

        log_event(
            _LOGGER,
            logging.INFO,
            "poa.result",
            ratio=ratio,
            certified=certified,
            c_hat=c_hat,
            c_star=c_star,
            phi_star_cost=total_cost(pr, x_check),
        )

    return PoaResult(
        n=cfg.n,
        epsilon=cfg.epsilon,
        delta=poa_delta(cfg.n, cfg.epsilon),
        ratio=ratio,
        certified=certified,
        c_hat=c_hat,
        c_star=c_star,
        absolute_gap=c_hat - c_star,
        technology=tech.to_dict(),
        x_hat=[float(value) for value in x_hat.x],
        x_star=[float(value) for value in x_star.x],
        bound=cfg.bound,
        bound_exceeded=None if cfg.bound is None else bool(ratio > cfg.bound),
    )


__all__ = [
    "calibrate_poa_technology",
    "derivative_band",
    "efficiency_loss",
    "poa_delta",
    "poa_problem",
    "run_poa",
]
