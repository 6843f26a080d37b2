"""Expected individual and total costs with their analytic derivatives."""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ModelValidationError
from .liability import LiabilityMatrix
from .model.problem import (
    InvestmentProfile,
    Problem,
    chain_success_prefix,
    disruptor_distribution,
)
from .models import CostReport


def _check_inputs(pr: Problem, phi: LiabilityMatrix, x: InvestmentProfile) -> None:
    if phi.n != pr.n or len(x) != pr.n:
        raise ModelValidationError(
            f"dimension mismatch: problem {pr.n}, solution {phi.n}, profile {len(x)}"
        )


def _check_index(pr: Problem, k: int, label: str = "k") -> None:
    if not 1 <= int(k) <= pr.n:
        raise DomainError(f"agent index {label} = {k} outside 1..{pr.n}")


def expected_costs(pr: Problem, phi: LiabilityMatrix, x: InvestmentProfile) -> np.ndarray:
    """Vector of ``C_k(x; phi)``: liabilities weighted by who disrupts, plus investment."""

    _check_inputs(pr, phi, x)
    disruptors = disruptor_distribution(pr, x)[:-1]
    return disruptors @ phi.phi + x.x


def expected_cost(pr: Problem, phi: LiabilityMatrix, x: InvestmentProfile, k: int) -> float:
    """Expected cost of agent ``k`` (1-based)."""

    _check_index(pr, k)
    _check_inputs(pr, phi, x)
    disruptors = disruptor_distribution(pr, x)[:k]
    return float(disruptors @ phi.phi[:k, k - 1] + x.x[k - 1])


def cost_report(pr: Problem, phi: LiabilityMatrix, x: InvestmentProfile) -> CostReport:
    per_agent = expected_costs(pr, phi, x)
    return CostReport(
        per_agent=per_agent,
        total=total_cost(pr, x),
        disruptor_probs=disruptor_distribution(pr, x),
        investment=x.x.copy(),
    )


def total_cost(pr: Problem, x: InvestmentProfile) -> float:
    """``C(x) = sum_j (1 - prod_{i<=j} p_i) l_j + sum_j x_j``; independent of the solution."""

    prefix = chain_success_prefix(pr, x)
    return float(np.sum((1.0 - prefix) * pr.losses) + np.sum(x.x))


def _tail_exposure(pr: Problem, prefix: np.ndarray) -> np.ndarray:
    """``sum_{k >= i} P_k l_k`` for every ``i``."""

    weighted = prefix * pr.losses
    return np.cumsum(weighted[::-1])[::-1]


def partial_total(pr: Problem, x: InvestmentProfile, i: int) -> float:
    """``dC/dx_i = 1 - (p_i'/p_i) sum_{k>=i} P_k l_k``."""

    _check_index(pr, i, "i")
    hazard = pr.hazard_ratio(x, i)
    exposure = _tail_exposure(pr, chain_success_prefix(pr, x))
    return float(1.0 - hazard * exposure[i - 1])


def gradient_total(pr: Problem, x: InvestmentProfile) -> np.ndarray:
    """All partials of the total cost; every ``x_i`` must be positive."""

    exposure = _tail_exposure(pr, chain_success_prefix(pr, x))
    hazards = np.array([pr.hazard_ratio(x, i) for i in range(1, pr.n + 1)])
    return 1.0 - hazards * exposure


def partial_cost(pr: Problem, phi: LiabilityMatrix, x: InvestmentProfile, k: int, i: int) -> float:
    """``dC_k/dx_i``.

    Zero for ``i > k``. For ``i = k`` it is ``1 - (p_k'/p_k) P_k phi(k,k)``.
    For ``i < k`` it collects agent ``i``'s own indirect term and the
    liabilities of the disruptors between ``i`` and ``k``:
    ``(p_i'/p_i) (-P_i phi(i,k) + sum_{i<j<=k} d_j phi(j,k))``.
    """

    _check_index(pr, k)
    _check_index(pr, i, "i")
    _check_inputs(pr, phi, x)
    if i > k:
        return 0.0
    hazard = pr.hazard_ratio(x, i)
    prefix = chain_success_prefix(pr, x)
    column = phi.phi[:, k - 1]
    if i == k:
        return float(1.0 - hazard * prefix[k - 1] * column[k - 1])
    disruptors = disruptor_distribution(pr, x)
    downstream = float(disruptors[i:k] @ column[i:k])
    return float(hazard * (downstream - prefix[i - 1] * column[i - 1]))


def cross_partial_sign(pr: Problem, phi: LiabilityMatrix, x: InvestmentProfile, k: int, i: int) -> float:
    """``d^2 C_k / dx_i dx_k = -(p_i'/p_i)(p_k'/p_k) P_k phi(k,k)`` for ``i < k``; never positive."""

    _check_index(pr, k)
    _check_index(pr, i, "i")
    _check_inputs(pr, phi, x)
    if not i < k:
        raise DomainError(f"cross partial needs i < k, got i = {i}, k = {k}")
    prefix = chain_success_prefix(pr, x)
    return float(-pr.hazard_ratio(x, i) * pr.hazard_ratio(x, k) * prefix[k - 1] * phi.phi[k - 1, k - 1])


__all__ = [
    "cost_report",
    "cross_partial_sign",
    "expected_cost",
    "expected_costs",
    "gradient_total",
    "partial_cost",
    "partial_total",
    "total_cost",
]
