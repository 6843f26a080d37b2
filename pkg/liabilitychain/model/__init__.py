"""Problems, technologies and elementary chain probabilities."""

from .problem import (
    InvestmentProfile,
    Problem,
    chain_success_prefix,
    disruptor_distribution,
    marginal_losses_from_systemic,
    problem_from_dict,
    systemic_from_marginal,
    validate_problem,
)
from .technology import (
    PowerExponential,
    SoftCappedLinear,
    SqrtSaturating,
    Technology,
    tech_deriv,
    tech_eval,
    technology_from_dict,
)

__all__ = [
    "InvestmentProfile",
    "PowerExponential",
    "Problem",
    "SoftCappedLinear",
    "SqrtSaturating",
    "Technology",
    "chain_success_prefix",
    "disruptor_distribution",
    "marginal_losses_from_systemic",
    "problem_from_dict",
    "systemic_from_marginal",
    "tech_deriv",
    "tech_eval",
    "technology_from_dict",
    "validate_problem",
]
