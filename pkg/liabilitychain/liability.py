"""Liability solutions: who pays what when a given agent disrupts the chain.

A solution is an ``n x n`` matrix ``phi`` where ``phi[i, j]`` (0-based here,
1-based in every external format) is the liability of agent ``j`` when ``i``
is the disruptor. Entries left of the diagonal are zero because agents ahead
of the disruptor honoured their agreement. A solution is balanced when each
row pays exactly the losses the disruption causes downstream.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence

import numpy as np

from .errors import DomainError, ModelValidationError
from .model.problem import InvestmentProfile, Problem, systemic_from_marginal
from .models import AxiomReport
from .tracing import log_event

_LOGGER = logging.getLogger("liability")

AXIOM_TOLERANCE = 1e-9


@dataclass(frozen=True, slots=True, eq=False)
class LiabilityMatrix:
    """A solution ``phi`` together with the losses it has to cover."""

    phi: np.ndarray
    losses: np.ndarray

    def __post_init__(self) -> None:
        phi = np.array(self.phi, dtype=float)
        losses = np.array(self.losses, dtype=float).reshape(-1)
        if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
            raise ModelValidationError(f"liability matrix must be square, got shape {phi.shape}")
        if phi.shape[0] != losses.size:
            raise ModelValidationError(
                f"liability matrix is {phi.shape[0]}x{phi.shape[0]} but there are {losses.size} losses"
            )
        if not np.all(np.isfinite(phi)):
            raise ModelValidationError("liability matrix contains non-finite entries")
        phi.setflags(write=False)
        losses.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "losses", losses)

    @property
    def n(self) -> int:
        return int(self.losses.size)

    @property
    def direct(self) -> np.ndarray:
        return np.diag(self.phi).copy()

    def entry(self, i: int, j: int) -> float:
        """Return ``phi(i, j)`` for 1-based agents."""

        return float(self.phi[i - 1, j - 1])

    def indirect_total(self, row: int) -> float:
        return float(np.sum(self.phi[row - 1, row:]))

    def require_balanced(self) -> "LiabilityMatrix":
        report = check_axioms(self)
        if not (report.balance and report.nonnegative):
            raise ModelValidationError("liability matrix is not a balanced solution", report.located)
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {"phi": self.phi.tolist(), "losses": self.losses.tolist()}


@dataclass(frozen=True, slots=True, eq=False)
class PiWeights:
    """Weights ``pi`` in ``[0, 1]^n``; ``pi[0]`` is carried but never used."""

    pi: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.pi, dtype=float).reshape(-1)
        bad = [
            f"pi_{i} = {value!r}"
            for i, value in enumerate(values, start=1)
            if not (math.isfinite(value) and 0.0 <= value <= 1.0)
        ]
        if bad:
            raise DomainError(f"weights outside [0,1]: {', '.join(bad)}")
        values.setflags(write=False)
        object.__setattr__(self, "pi", values)

    def __len__(self) -> int:
        return int(self.pi.size)


def _as_losses(losses: Sequence[float] | np.ndarray) -> np.ndarray:
    values = np.asarray(losses, dtype=float).reshape(-1)
    if values.size == 0 or not np.all(np.isfinite(values)) or np.any(values <= 0.0):
        raise ModelValidationError("losses must be a non-empty vector of positive numbers")
    return values


def _direct_recursion(losses: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``D_n = l_n``, ``D_i = l_i + w_{i+1} D_{i+1}``."""

    direct = np.empty_like(losses)
    direct[-1] = losses[-1]
    for i in range(losses.size - 2, -1, -1):
        direct[i] = losses[i] + weights[i + 1] * direct[i + 1]
    return direct


def make_pi_solution(losses: Sequence[float] | np.ndarray, pi: PiWeights | Sequence[float]) -> LiabilityMatrix:
    """Build the solution with direct liabilities from ``pi`` and ``phi(i,j) = (1 - pi_j) phi(j,j)``."""

    values = _as_losses(losses)
    weights = pi if isinstance(pi, PiWeights) else PiWeights(np.asarray(pi, dtype=float))
    if len(weights) != values.size:
        raise ModelValidationError(f"{len(weights)} weights for {values.size} agents")
    direct = _direct_recursion(values, weights.pi)
    indirect = (1.0 - weights.pi) * direct
    phi = np.triu(np.broadcast_to(indirect, (values.size, values.size)), k=1) + np.diag(direct)
    return LiabilityMatrix(phi=phi, losses=values)


def make_disruptor_pays(losses: Sequence[float] | np.ndarray) -> LiabilityMatrix:
    """The disruptor pays every downstream loss."""

    values = _as_losses(losses)
    return LiabilityMatrix(phi=np.diag(systemic_from_marginal(values)), losses=values)


def make_own_loss(losses: Sequence[float] | np.ndarray) -> LiabilityMatrix:
    """Every agent bears its own loss, whoever disrupts."""

    values = _as_losses(losses)
    phi = np.triu(np.broadcast_to(values, (values.size, values.size)))
    return LiabilityMatrix(phi=phi, losses=values)


def _require_positive_profile(x_star: InvestmentProfile) -> None:
    if np.any(x_star.x <= 0.0):
        zero = [i + 1 for i in np.flatnonzero(x_star.x <= 0.0)]
        raise DomainError(f"first-best liabilities need strictly positive investments; agents {zero} invest 0")


def first_best_direct_liabilities(pr: Problem, x_star: InvestmentProfile) -> np.ndarray:
    """Direct liabilities ``phi(i,i) = l_i + p_{i+1}(x*_{i+1}) phi(i+1,i+1)``."""

    _require_positive_profile(x_star)
    return _direct_recursion(pr.losses, pr.success_probabilities(x_star))


def net_harm(pr: Problem, x_star: InvestmentProfile) -> np.ndarray:
    """Harm a disruption at ``i`` adds relative to the chain failing anyway.

    Evaluates ``L_i - sum_{k > i} (1 - prod_{i < j <= k} p_j(x*_j)) l_k`` term by
    term; it equals the first-best direct liabilities.
    """

    _require_positive_profile(x_star)
    probabilities = pr.success_probabilities(x_star)
    systemic = systemic_from_marginal(pr.losses)
    harm = np.empty(pr.n)
    for i in range(pr.n):
        survive = 1.0
        excused = 0.0
        for k in range(i + 1, pr.n):
            survive *= probabilities[k]
            excused += (1.0 - survive) * pr.losses[k]
        harm[i] = systemic[i] - excused
    return harm


def make_phi_star(pr: Problem, x_star: InvestmentProfile) -> LiabilityMatrix:
    """The first-best solution with independent indirect liabilities.

    ``phi*(i,j) = (1 - p_j(x*_j)) phi*(j,j)`` for ``i < j``, i.e. the weight
    family at ``pi_j = p_j(x*_j)``.
    """

    _require_positive_profile(x_star)
    return make_pi_solution(pr.losses, PiWeights(pr.success_probabilities(x_star)))


def check_axioms(phi: LiabilityMatrix, tolerance: float = AXIOM_TOLERANCE) -> AxiomReport:
    """Audit balance, nonnegativity and the two characterising axioms.

    Violations are measured in loss units and compared against
    ``tolerance * sum(l)``.
    """

    matrix = phi.phi
    n = phi.n
    scale = tolerance * float(np.sum(phi.losses))
    located: List[str] = []

    lower = np.tril(matrix, k=-1)
    negative = max(float(-np.min(matrix)), 0.0)
    lower_worst = float(np.max(np.abs(lower))) if n > 1 else 0.0
    nonnegative_violation = max(negative, lower_worst)
    for i, j in zip(*np.nonzero(np.abs(lower) > scale)):
        located.append(f"row {i + 1}: successful agent {j + 1} carries liability {matrix[i, j]!r}")
    for i, j in zip(*np.nonzero(matrix < -scale)):
        located.append(f"row {i + 1}: negative liability {matrix[i, j]!r} for agent {j + 1}")

    row_gaps = np.triu(matrix).sum(axis=1) - systemic_from_marginal(phi.losses)
    for i in np.flatnonzero(np.abs(row_gaps) > scale):
        located.append(f"row {i + 1}: unbalanced by {row_gaps[i]!r}")
    balance_violation = float(np.max(np.abs(row_gaps)))

    direct = np.diag(matrix)
    higher_gaps = np.triu(matrix, k=1) - np.triu(np.broadcast_to(direct, (n, n)), k=1)
    higher_violation = max(float(np.max(higher_gaps)), 0.0) if n > 1 else 0.0
    for i, j in zip(*np.nonzero(higher_gaps > scale)):
        located.append(f"row {i + 1}: indirect liability of agent {j + 1} exceeds its direct liability")

    independent_violation = 0.0
    for k in range(2, n):
        column = matrix[:k, k]
        spread = float(np.max(column) - np.min(column))
        independent_violation = max(independent_violation, spread)
        if spread > scale:
            located.append(f"column {k + 1}: indirect liabilities differ across disruptors by {spread!r}")

    report = AxiomReport(
        balance=balance_violation <= scale,
        higher_direct=higher_violation <= scale,
        independent_indirect=independent_violation <= scale,
        nonnegative=nonnegative_violation <= scale,
        balance_violation=balance_violation,
        higher_direct_violation=higher_violation,
        independent_violation=independent_violation,
        nonnegative_violation=nonnegative_violation,
        tolerance=scale,
        located=located,
    )
    if not report.passed:
        log_event(_LOGGER, logging.DEBUG, "liability.axioms.failed", located=located)
    return report


def recover_pi(phi: LiabilityMatrix, *, strict: bool = False) -> PiWeights:
    """Recover the weights of an axiom-satisfying solution from its first row.

    ``pi_1`` is set to 1. With ``strict`` every earlier row is cross-checked.
    """

    report = check_axioms(phi)
    if not report.passed:
        raise DomainError("solution violates the axioms; no weight vector exists: " + "; ".join(report.located))
    matrix = phi.phi
    direct = np.diag(matrix)
    pi = np.ones(phi.n)
    pi[1:] = 1.0 - matrix[0, 1:] / direct[1:]
    if strict:
        for j in range(1, phi.n):
            implied = 1.0 - matrix[:j, j] / direct[j]
            if np.max(np.abs(implied - pi[j])) > AXIOM_TOLERANCE:
                raise DomainError(f"rows disagree on pi_{j + 1}: {implied.tolist()}")
    return PiWeights(np.clip(pi, 0.0, 1.0))


def rebalance_indirect(phi: LiabilityMatrix, row: int, shares: Sequence[float]) -> LiabilityMatrix:
    """Redistribute row ``row``'s indirect total over the later agents.

    ``shares`` has one nonnegative entry per agent after ``row``; the diagonal
    and the row total are unchanged.
    """

    n = phi.n
    if not 1 <= row < n:
        raise DomainError(f"row {row} has no indirect entries to rebalance (n = {n})")
    weights = np.asarray(shares, dtype=float).reshape(-1)
    if weights.size != n - row or np.any(weights < 0.0) or not np.sum(weights) > 0.0:
        raise DomainError(f"need {n - row} nonnegative shares with a positive sum")
    matrix = phi.phi.copy()
    total = float(np.sum(matrix[row - 1, row:]))
    matrix[row - 1, row:] = total * weights / np.sum(weights)
    return LiabilityMatrix(phi=matrix, losses=phi.losses)


def scale_direct(phi: LiabilityMatrix, row: int, factor: float) -> LiabilityMatrix:
    """Scale ``phi(row,row)`` by ``factor`` and absorb the change in the row's indirect entries.

    The indirect entries move proportionally to their current values, or
    evenly when they are all zero. Raises :class:`DomainError` when an entry
    would turn negative.
    """

    n = phi.n
    if not 1 <= row < n:
        raise DomainError(f"row {row} cannot rebalance a direct-liability change (n = {n})")
    if not (math.isfinite(factor) and factor >= 0.0):
        raise DomainError(f"scale factor must be finite and nonnegative, got {factor!r}")
    matrix = phi.phi.copy()
    diag = matrix[row - 1, row - 1]
    change = diag * (factor - 1.0)
    indirect = matrix[row - 1, row:]
    total = float(np.sum(indirect))
    if total > 0.0:
        updated = indirect * (1.0 - change / total)
    else:
        updated = indirect - change / indirect.size
    if np.any(updated < 0.0):
        raise DomainError(f"row {row} cannot absorb a direct-liability change of {change!r}")
    matrix[row - 1, row - 1] = diag + change
    matrix[row - 1, row:] = updated
    return LiabilityMatrix(phi=matrix, losses=phi.losses)


def pi_from_fault_rates(rates: Sequence[float]) -> PiWeights:
    """Weights from per-agent fault rates: ``pi_j = 1 - rate_j``."""

    values = np.asarray(rates, dtype=float).reshape(-1)
    return PiWeights(1.0 - values)


__all__ = [
    "AXIOM_TOLERANCE",
    "LiabilityMatrix",
    "PiWeights",
    "check_axioms",
    "first_best_direct_liabilities",
    "make_disruptor_pays",
    "make_own_loss",
    "make_phi_star",
    "make_pi_solution",
    "net_harm",
    "pi_from_fault_rates",
    "rebalance_indirect",
    "recover_pi",
    "scale_direct",
]
