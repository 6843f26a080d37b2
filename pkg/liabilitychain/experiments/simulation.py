"""Monte Carlo study of efficient investments under the first-best solution.

Each instance draws i.i.d. uniform losses from its own counter-based stream
``Philox(SeedSequence([seed, r]))``, solves the efficient profile, builds the
first-best solution with independent indirect liabilities and records six
per-agent quantities. Instances are stacked in replication order before
averaging, so the output does not depend on the number of workers.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from itertools import repeat
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ..costs import expected_costs
from ..errors import LiabilityChainError, SimulationError
from ..liability import make_phi_star
from ..model.problem import Problem, disruptor_distribution, survival_before
from ..models import SimConfig, SimRecord, SimulationResult, SolveOptions
from ..solvers import solve_efficient
from ..tracing import log_event, trace

_LOGGER = logging.getLogger("experiments.simulation")

COLUMNS: Tuple[str, ...] = (
    "agent",
    "direct_liability",
    "indirect_liability",
    "investment",
    "p_direct",
    "p_indirect",
    "expected_cost",
)
_QUANTITIES = COLUMNS[1:]


def instance_generator(seed: int, instance: int) -> np.random.Generator:
    """Independent stream for replication ``instance`` of root ``seed``."""

    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, instance])))


def draw_problem(cfg: SimConfig, instance: int) -> Problem:
    rng = instance_generator(cfg.seed, instance)
    losses = rng.uniform(cfg.loss_low, cfg.loss_high, size=cfg.n)
    return Problem(losses=losses, technologies=(cfg.technology,) * cfg.n)


def simulate_instance(cfg: SimConfig, instance: int, opts: SolveOptions) -> np.ndarray:
    """Per-agent quantities of one instance as an ``(n, 6)`` array in column order."""

    pr = draw_problem(cfg, instance)
    x_star = solve_efficient(pr, opts).profile
    phi = make_phi_star(pr, x_star)
    indirect = np.concatenate(([0.0], phi.phi[0, 1:]))
    return np.column_stack(
        [
            phi.direct,
            indirect,
            x_star.x,
            disruptor_distribution(pr, x_star)[:-1],
            1.0 - survival_before(pr, x_star),
            expected_costs(pr, phi, x_star),
        ]
    )


def _run_instance(cfg: SimConfig, instance: int, opts: SolveOptions) -> Tuple[int, Optional[np.ndarray], str]:
    """Worker entry point; failures travel back as text so they survive pickling."""

    try:
        return instance, simulate_instance(cfg, instance, opts), ""
    except LiabilityChainError as exc:
        return instance, None, f"{type(exc).__name__}: {exc}"


def _pairwise_mean(stacked: np.ndarray) -> np.ndarray:
    """Mean over replications, summed pairwise along a contiguous axis."""

    contiguous = np.ascontiguousarray(np.moveaxis(stacked, 0, -1))
    return np.add.reduce(contiguous, axis=-1) / stacked.shape[0]


def run_simulation(cfg: SimConfig, opts: Optional[SolveOptions] = None) -> SimulationResult:
    """Average the per-agent quantities over ``cfg.reps`` random instances."""

    opts = opts or SolveOptions()
    if not cfg.certify:
        opts = opts.model_copy(update={"multistart": 0})

    with trace("simulation.run", logger=_LOGGER, n=cfg.n, reps=cfg.reps, seed=cfg.seed, workers=cfg.workers) as span:
        if cfg.workers > 1:
            chunksize = max(1, cfg.reps // (8 * cfg.workers))
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                outcomes = list(
                    pool.map(_run_instance, repeat(cfg), range(cfg.reps), repeat(opts), chunksize=chunksize)
                )
        else:
            outcomes = [_run_instance(cfg, instance, opts) for instance in range(cfg.reps)]

        rows: List[np.ndarray] = []
        for instance, values, error in outcomes:
            if values is None:
                log_event(_LOGGER, logging.ERROR, "simulation.instance.failed", instance=instance, error=error)
                raise SimulationError(
                    f"instance {instance} (seed {cfg.seed}) failed: {error}",
                    instance=instance,
                    diagnostics={"seed": cfg.seed, "instance": instance},
                )
            rows.append(values)

        stacked = np.stack(rows)
        means = _pairwise_mean(stacked)
        span.record(instances=len(rows))

    records = [
        SimRecord(agent=i + 1, **{name: float(means[i, column]) for column, name in enumerate(_QUANTITIES)})
        for i in range(cfg.n)
    ]
    return SimulationResult(
        records=records,
        reps=cfg.reps,
        seed=cfg.seed,
        instances=stacked if cfg.per_instance else None,
    )


def records_frame(result: SimulationResult) -> pd.DataFrame:
    """Mean records in the published column order."""

    return pd.DataFrame([record.to_dict() for record in result.records], columns=list(COLUMNS))


def instances_frame(result: SimulationResult) -> pd.DataFrame:
    """One row per (instance, agent); requires ``per_instance``."""

    if result.instances is None:
        raise ValueError("simulation was run without per-instance records")
    reps, n, _ = result.instances.shape
    frame = pd.DataFrame(result.instances.reshape(reps * n, len(_QUANTITIES)), columns=list(_QUANTITIES))
    frame.insert(0, "agent", np.tile(np.arange(1, n + 1), reps))
    frame.insert(0, "instance", np.repeat(np.arange(reps), n))
    return frame


__all__ = [
    "COLUMNS",
    "draw_problem",
    "instance_generator",
    "instances_frame",
    "records_frame",
    "run_simulation",
    "simulate_instance",
]
