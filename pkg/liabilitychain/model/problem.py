"""Problems, investment profiles and the chain's elementary probabilities."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from ..errors import DomainError, ModelValidationError
from ..tracing import log_event
from .technology import Technology, shape_violations, technology_from_dict

_LOGGER = logging.getLogger("model.problem")


def _readonly(values: Iterable[float] | np.ndarray) -> np.ndarray:
    array = np.array(values, dtype=float).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, slots=True, eq=False)
class Problem:
    """A chain ``<l, p>``: marginal losses and one technology per agent.

    Construction accepts anything shaped like a problem; use
    :func:`validate_problem` or :meth:`require_valid` before solving.
    """

    losses: np.ndarray
    technologies: Tuple[Technology, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "losses", _readonly(self.losses))
        object.__setattr__(self, "technologies", tuple(self.technologies))

    @property
    def n(self) -> int:
        return int(self.losses.size)

    @property
    def total_loss(self) -> float:
        return float(np.sum(self.losses))

    def require_valid(self) -> "Problem":
        problems = validate_problem(self)
        if problems:
            raise ModelValidationError("invalid problem", problems)
        return self

    # ------------------------------------------------------------------
    # Per-agent evaluations
    # ------------------------------------------------------------------
    def success_probabilities(self, x: "InvestmentProfile") -> np.ndarray:
        self._check_profile(x)
        return np.array([tech.value(xi) for tech, xi in zip(self.technologies, x.x)])

    def failure_probabilities(self, x: "InvestmentProfile") -> np.ndarray:
        self._check_profile(x)
        return np.array([tech.complement(xi) for tech, xi in zip(self.technologies, x.x)])

    def hazard_ratio(self, x: "InvestmentProfile", i: int) -> float:
        """Return ``p_i'(x_i) / p_i(x_i)`` for 1-based agent ``i``."""

        self._check_agent(i)
        xi = float(x.x[i - 1])
        if xi <= 0.0:
            raise DomainError(f"agent {i} has x_{i} = {xi!r}; derivative needs x_{i} > 0")
        return self.technologies[i - 1].hazard_ratio(xi)

    def systemic_losses(self) -> np.ndarray:
        return systemic_from_marginal(self.losses)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "losses": [float(value) for value in self.losses],
            "technologies": [tech.to_dict() for tech in self.technologies],
        }

    # ------------------------------------------------------------------
    # Internal helpers
    # ------------------------------------------------------------------
    def _check_profile(self, x: "InvestmentProfile") -> None:
        if len(x) != self.n:
            raise ModelValidationError(
                f"profile has {len(x)} entries but the problem has {self.n} agents"
            )

    def _check_agent(self, i: int) -> None:
        if not 1 <= int(i) <= self.n:
            raise DomainError(f"agent index {i} outside 1..{self.n}")


@dataclass(frozen=True, slots=True, eq=False)
class InvestmentProfile:
    """Nonnegative investments, one per agent."""

    x: np.ndarray

    def __post_init__(self) -> None:
        values = _readonly(self.x)
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            bad = [f"x_{i + 1} = {value!r}" for i, value in enumerate(values) if not (value >= 0.0 and math.isfinite(value))]
            raise ModelValidationError("investments must be finite and nonnegative", bad)
        object.__setattr__(self, "x", values)

    def __len__(self) -> int:
        return int(self.x.size)

    def __getitem__(self, i: int) -> float:
        return float(self.x[i])

    def with_value(self, i: int, value: float) -> "InvestmentProfile":
        """Return a copy with 1-based agent ``i`` set to ``value``."""

        updated = self.x.copy()
        updated[i - 1] = value
        return InvestmentProfile(updated)

    def to_dict(self) -> Dict[str, Any]:
        return {"x": [float(value) for value in self.x]}


def validate_problem(pr: Problem) -> List[str]:
    """Return every violated problem or technology invariant."""

    problems: List[str] = []
    n = pr.n
    if n < 1:
        problems.append("problem needs at least one agent")
    if len(pr.technologies) != n:
        problems.append(f"{n} losses but {len(pr.technologies)} technologies")
    for i, loss in enumerate(pr.losses, start=1):
        if not (math.isfinite(loss) and loss > 0.0):
            problems.append(f"ℓ_{i} not positive ({loss!r})")
    for i, tech in enumerate(pr.technologies, start=1):
        if not isinstance(tech, Technology):
            problems.append(f"technology {i} is not a Technology ({type(tech).__name__})")
            continue
        problems.extend(f"technology {i}: {issue}" for issue in shape_violations(tech))

    if problems:
        log_event(_LOGGER, logging.DEBUG, "problem.validate.violations", count=len(problems), violations=problems)
    return problems


def marginal_losses_from_systemic(systemic: Sequence[float]) -> np.ndarray:
    """Convert systemic losses ``L`` into marginal losses ``l_i = L_i - L_{i+1}``."""

    values = np.asarray(systemic, dtype=float).reshape(-1)
    if values.size == 0:
        raise DomainError("systemic losses must not be empty")
    if not np.all(np.isfinite(values)) or values[-1] <= 0.0:
        raise DomainError("systemic losses must be finite and positive")
    marginal = values - np.append(values[1:], 0.0)
    if np.any(marginal <= 0.0):
        first = int(np.flatnonzero(marginal <= 0.0)[0]) + 1
        raise DomainError(f"systemic losses must strictly decrease (L_{first} <= L_{first + 1})")
    return marginal


def systemic_from_marginal(losses: Sequence[float]) -> np.ndarray:
    """Suffix sums ``L_i = sum_{j >= i} l_j``."""

    values = np.asarray(losses, dtype=float).reshape(-1)
    return np.cumsum(values[::-1])[::-1]


def chain_success_prefix(pr: Problem, x: InvestmentProfile) -> np.ndarray:
    """Return ``(prod_{i <= j} p_i(x_i))_j``."""

    return np.cumprod(pr.success_probabilities(x))


def survival_before(pr: Problem, x: InvestmentProfile) -> np.ndarray:
    """Return ``(prod_{i < j} p_i(x_i))_j``: the chance agent ``j`` is reached."""

    prefix = chain_success_prefix(pr, x)
    return np.concatenate(([1.0], prefix[:-1]))


def disruptor_distribution(pr: Problem, x: InvestmentProfile) -> np.ndarray:
    """Return the law of the first failing agent; the last slot is "nobody fails"."""

    reached = survival_before(pr, x)
    failing = reached * pr.failure_probabilities(x)
    return np.append(failing, reached[-1] * pr.technologies[-1].value(x[-1]))


def problem_from_dict(payload: Mapping[str, Any]) -> Problem:
    """Build a problem from a decoded problem file.

    Either ``losses`` (marginal) or ``systemic_losses`` may be given.
    """

    if "systemic_losses" in payload and "losses" in payload:
        raise ModelValidationError("give either losses or systemic_losses, not both")
    if "systemic_losses" in payload:
        try:
            losses = marginal_losses_from_systemic(payload["systemic_losses"])
        except DomainError as exc:
            raise ModelValidationError(str(exc), [str(exc)]) from exc
    else:
        losses = np.asarray(payload.get("losses", []), dtype=float)
    technologies = tuple(technology_from_dict(item) for item in payload.get("technologies", []))
    return Problem(losses=losses, technologies=technologies)


__all__ = [
    "InvestmentProfile",
    "Problem",
    "chain_success_prefix",
    "disruptor_distribution",
    "marginal_losses_from_systemic",
    "problem_from_dict",
    "survival_before",
    "systemic_from_marginal",
    "validate_problem",
]
