"""Run configurations and result records shared by the solvers and the CLI."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .model.problem import InvestmentProfile
from .model.technology import SqrtSaturating, Technology, technology_from_dict


class SolveOptions(BaseModel):
    """Numerical settings for the equilibrium and efficient solvers."""

    model_config = ConfigDict(frozen=True)

    tolerance: float = Field(default=1e-10, description="Bound on first-order-condition residuals")
    max_outer_iterations: int = Field(default=500, description="Sweep limit of the efficient solver")
    bracket_growth: float = Field(default=2.0, description="Growth factor when expanding a root bracket")
    multistart: int = Field(default=5, description="Random restarts certifying the efficient profile")
    seed: int = Field(default=0, description="Seed for the multistart generator")

    @field_validator("tolerance")
    @classmethod
    def _positive_tolerance(cls, value: float) -> float:
        if not (math.isfinite(value) and value > 0.0):
            raise ValueError(f"tolerance must be positive, got {value!r}")
        return value

    @field_validator("max_outer_iterations")
    @classmethod
    def _positive_iterations(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"max_outer_iterations must be >= 1, got {value!r}")
        return value

    @field_validator("bracket_growth")
    @classmethod
    def _growth_above_one(cls, value: float) -> float:
        if not (math.isfinite(value) and value > 1.0):
            raise ValueError(f"bracket_growth must exceed 1, got {value!r}")
        return value

    @field_validator("multistart")
    @classmethod
    def _nonnegative_multistart(cls, value: int) -> int:
        if value < 0:
            raise ValueError(f"multistart must be >= 0, got {value!r}")
        return value


class SimConfig(BaseModel):
    """Monte Carlo study over random loss vectors with a shared technology."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int = Field(default=8, description="Agents per chain")
    reps: int = Field(default=10_000, description="Number of random instances")
    loss_low: float = Field(default=1.0, description="Lower bound of the uniform loss law")
    loss_high: float = Field(default=100.0, description="Upper bound of the uniform loss law")
    technology: Technology = Field(default_factory=SqrtSaturating, description="Technology of every agent")
    seed: int = Field(default=0, description="Root seed; instance r draws from the stream (seed, r)")
    workers: int = Field(default=1, description="Worker processes for the replications")
    per_instance: bool = Field(default=False, description="Keep every instance's records")
    certify: bool = Field(default=False, description="Run multistart certification per instance")

    @field_validator("technology", mode="before")
    @classmethod
    def _coerce_technology(cls, value: Any) -> Technology:
        if isinstance(value, dict):
            value = technology_from_dict(value)
        if not isinstance(value, Technology):
            raise ValueError("technology must be a Technology or its dict form")
        if not value.is_valid:
            raise ValueError("; ".join(value.violations()))
        return value

    @field_validator("n", "reps", "workers")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"must be >= 1, got {value!r}")
        return value

    @field_validator("seed")
    @classmethod
    def _nonnegative_seed(cls, value: int) -> int:
        if value < 0:
            raise ValueError(f"seed must be nonnegative, got {value!r}")
        return value

    @model_validator(mode="after")
    def _ordered_bounds(self) -> "SimConfig":
        if not (math.isfinite(self.loss_low) and math.isfinite(self.loss_high)):
            raise ValueError("loss bounds must be finite")
        if not 0.0 < self.loss_low <= self.loss_high:
            raise ValueError(
                f"need 0 < loss_low <= loss_high, got {self.loss_low!r} and {self.loss_high!r}"
            )
        return self


class PoaConfig(BaseModel):
    """Efficiency-loss construction with losses ``(eps, ..., eps, 1)``."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(default=10, description="Agents in the constructed chain")
    epsilon: float = Field(default=0.01, description="Small loss of the first n-1 agents")
    bound: Optional[float] = Field(default=None, description="Optional target ratio B")

    @field_validator("n")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"n must be >= 1, got {value!r}")
        return value

    @field_validator("epsilon")
    @classmethod
    def _open_unit_interval(cls, value: float) -> float:
        if not (math.isfinite(value) and 0.0 < value < 1.0):
            raise ValueError(f"epsilon must lie in (0,1), got {value!r}")
        return value

    @property
    def delta(self) -> float:
        """``delta`` with ``(1 - delta) ** (n + 1) = 1 - epsilon``."""

        return -math.expm1(math.log1p(-self.epsilon) / (self.n + 1))


class RunConfig(BaseModel):
    """Global CLI flags shared by every subcommand."""

    command: str = Field(..., description="Selected subcommand")
    seed: int = Field(default=0, description="Root seed for every random draw")
    out: Path = Field(default=Path("results"), description="Output directory")
    tol: Optional[float] = Field(default=None, description="Override of the solver tolerance")
    log_level: str = Field(default="WARNING", description="Logging verbosity")

    @field_validator("command", mode="before")
    @classmethod
    def _known_command(cls, value: str) -> str:
        candidate = (value or "").strip().lower()
        allowed = {"solve", "liability", "simulate", "poa", "verify"}
        if candidate not in allowed:
            raise ValueError(f"Unsupported command '{value}'. Expected one of: {', '.join(sorted(allowed))}.")
        return candidate

    @field_validator("seed")
    @classmethod
    def _nonnegative_seed(cls, value: int) -> int:
        if value < 0:
            raise ValueError(f"--seed must be nonnegative, got {value!r}")
        return value

    @field_validator("tol")
    @classmethod
    def _positive_tol(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not (math.isfinite(value) and value > 0.0):
            raise ValueError(f"--tol must be positive, got {value!r}")
        return value

    @field_validator("log_level", mode="before")
    @classmethod
    def _normalise_log_level(cls, value: str | None) -> str:
        return (value or "WARNING").strip().upper()


@dataclass(slots=True)
class Serializable:
    """Base dataclass providing JSON serialisation helpers."""

    def to_dict(self) -> Dict[str, Any]:
        """Convert the dataclass to a JSON-ready dictionary."""

        def _convert(value: Any) -> Any:
            if dataclasses.is_dataclass(value) and not isinstance(value, type):
                if hasattr(value, "to_dict") and not isinstance(value, Serializable):
                    return _convert(value.to_dict())
                return {f.name: _convert(getattr(value, f.name)) for f in dataclasses.fields(value) if not f.name.startswith("_")}
            if isinstance(value, np.ndarray):
                return [_convert(item) for item in value.tolist()]
            if isinstance(value, np.generic):
                return value.item()
            if isinstance(value, (list, tuple)):
                return [_convert(item) for item in value]
            if isinstance(value, dict):
                return {key: _convert(val) for key, val in value.items()}
            return value

        return _convert(self)

    def to_json(self, path: Path) -> None:
        """Write the dataclass as JSON to the provided ``path``."""

        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass(slots=True)
class SolveResult(Serializable):
    """Outcome of a solver run; ``converged`` implies residuals within tolerance."""

    profile: InvestmentProfile
    residuals: np.ndarray
    converged: bool
    iterations: int
    tolerance: float
    corners: List[int] = field(default_factory=list)
    certified: Optional[bool] = None
    certificate_gap: Optional[float] = None

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if self.residuals.size else 0.0


@dataclass(slots=True)
class ProfileComparison(Serializable):
    """Equilibrium of a solution compared with the efficient profile."""

    matches: bool
    max_gap: float
    equilibrium: InvestmentProfile
    efficient: InvestmentProfile


@dataclass(slots=True)
class CostReport(Serializable):
    """Per-agent expected costs under a solution at a fixed profile."""

    per_agent: np.ndarray
    total: float
    disruptor_probs: np.ndarray
    investment: np.ndarray


@dataclass(slots=True)
class AxiomReport(Serializable):
    """Balance and the two characterising axioms of a liability matrix."""

    balance: bool
    higher_direct: bool
    independent_indirect: bool
    nonnegative: bool
    balance_violation: float
    higher_direct_violation: float
    independent_violation: float
    nonnegative_violation: float
    tolerance: float
    located: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.balance and self.higher_direct and self.independent_indirect and self.nonnegative


@dataclass(slots=True)
class SimRecord(Serializable):
    """Across-instance means for one agent."""

    agent: int
    direct_liability: float
    indirect_liability: float
    investment: float
    p_direct: float
    p_indirect: float
    expected_cost: float


@dataclass(slots=True)
class SimulationResult(Serializable):
    records: List[SimRecord]
    reps: int
    seed: int
    # (reps, n, 6) array of per-instance quantities, kept on request.
    instances: Optional[np.ndarray] = None


@dataclass(slots=True)
class EfficiencyLoss(Serializable):
    """Comparison of an equilibrium with the efficient profile."""

    ratio: float
    absolute_gap: float
    c_equilibrium: float
    c_efficient: float
    overinvesting: List[int] = field(default_factory=list)
    underinvesting: List[int] = field(default_factory=list)


@dataclass(slots=True)
class PoaResult(Serializable):
    n: int
    epsilon: float
    delta: float
    ratio: float
    certified: bool
    c_hat: float
    c_star: float
    absolute_gap: float
    technology: Dict[str, Any]
    x_hat: List[float]
    x_star: List[float]
    bound: Optional[float] = None
    bound_exceeded: Optional[bool] = None


@dataclass(slots=True)
class CheckResult(Serializable):
    """A single named verification check."""

    name: str
    passed: bool
    worst_violation: float
    tolerance: float
    fingerprint: str
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "pass": self.passed,
            "worst_violation": self.worst_violation,
            "tolerance": self.tolerance,
            "fingerprint": self.fingerprint,
            "detail": self.detail,
        }


@dataclass(slots=True)
class VerificationReport(Serializable):
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_list(self) -> List[Dict[str, Any]]:
        return [check.to_dict() for check in self.checks]

    def to_text(self) -> str:
        lines = []
        for check in self.checks:
            status = "PASS" if check.passed else "FAIL"
            line = (
                f"{status} {check.name} [{check.fingerprint}] "
                f"worst={check.worst_violation!r} tol={check.tolerance!r}"
            )
            if check.detail:
                line += f" ({check.detail})"
            lines.append(line)
        failed = sum(1 for check in self.checks if not check.passed)
        lines.append(f"{len(self.checks) - failed}/{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"


__all__ = [
    "AxiomReport",
    "CheckResult",
    "CostReport",
    "EfficiencyLoss",
    "PoaConfig",
    "PoaResult",
    "ProfileComparison",
    "RunConfig",
    "Serializable",
    "SimConfig",
    "SimRecord",
    "SimulationResult",
    "SolveOptions",
    "SolveResult",
    "VerificationReport",
]
