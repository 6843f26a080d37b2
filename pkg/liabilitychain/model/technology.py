"""Success-probability technologies available to the agents of a chain.

Every family maps an investment ``x >= 0`` to the probability ``p(x)`` that the
agent honours its agreement. All families are strictly increasing, strictly
concave, start at ``p(0) = 0`` with an infinite slope and stay below one.

Besides the value and derivative each family evaluates the complement
``1 - p(x)``, the hazard ratio ``p'(x) / p(x)`` and ``log p'(x)`` in closed form,
so the solvers never divide two tiny numbers and can root-find in log space.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, List, Mapping, Tuple, Type

import numpy as np

from ..errors import DomainError, ModelValidationError

# Log-spaced grid used for the numeric shape checks.
CHECK_GRID = np.logspace(-9.0, 3.0, 241)
_DIVERGENCE_POINTS = tuple(10.0 ** (-k) for k in (6, 9, 12, 15, 18))
_TIE_TOLERANCE = 4.0 * np.finfo(float).eps


def _log1pexp(t: float) -> float:
    """Return ``log(1 + exp(t))`` without overflow."""

    if t > 0.0:
        return t + math.log1p(math.exp(-t))
    return math.log1p(math.exp(t))


def _positive_finite(value: float) -> bool:
    return math.isfinite(value) and value > 0.0


class Technology(ABC):
    """Abstract success-probability curve ``p``."""

    __slots__ = ()

    family: ClassVar[str] = ""

    # ------------------------------------------------------------------
    # Public evaluation API
    # ------------------------------------------------------------------
    def value(self, x: float) -> float:
        """Return ``p(x)``."""

        self.require_valid()
        return self._value(float(x))

    def derivative(self, x: float) -> float:
        """Return ``p'(x)``; infinite at ``x = 0``."""

        self.require_valid()
        x = float(x)
        if x <= 0.0:
            return math.inf
        return self._derivative(x)

    def complement(self, x: float) -> float:
        """Return ``1 - p(x)`` evaluated without cancellation."""

        self.require_valid()
        return self._complement(float(x))

    def hazard_ratio(self, x: float) -> float:
        """Return ``p'(x) / p(x)`` for ``x > 0``."""

        self.require_valid()
        x = float(x)
        if x <= 0.0:
            raise DomainError(f"hazard ratio of {self.family} technology needs x > 0, got {x!r}")
        return self._hazard_ratio(x)

    def log_derivative(self, x: float) -> float:
        """Return ``log p'(x)`` for ``x > 0``; finite even where ``p'`` underflows."""

        self.require_valid()
        x = float(x)
        if x <= 0.0:
            raise DomainError(f"log-derivative of {self.family} technology needs x > 0, got {x!r}")
        return self._log_derivative(x)

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------
    def violations(self) -> List[str]:
        """Return parameter violations (empty when the parameters are valid)."""

        return list(self._violations)

    @property
    def is_valid(self) -> bool:
        return not self._violations

    def require_valid(self) -> None:
        if self._violations:
            raise ModelValidationError(
                f"invalid {self.family} technology parameters", list(self._violations)
            )

    @abstractmethod
    def parameter_violations(self) -> List[str]:
        """Compute parameter violations; called once at construction."""

    def __post_init__(self) -> None:
        object.__setattr__(self, "_violations", tuple(self.parameter_violations()))

    # ------------------------------------------------------------------
    # Serialisation
    # ------------------------------------------------------------------
    @abstractmethod
    def params(self) -> Dict[str, float]:
        """Return the family parameters keyed as in problem files."""

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"family": self.family}
        payload.update(self.params())
        return payload

    # ------------------------------------------------------------------
    # Family formulas
    # ------------------------------------------------------------------
    @abstractmethod
    def _value(self, x: float) -> float: ...

    @abstractmethod
    def _complement(self, x: float) -> float: ...

    @abstractmethod
    def _hazard_ratio(self, x: float) -> float: ...

    @abstractmethod
    def _log_derivative(self, x: float) -> float: ...

    def _derivative(self, x: float) -> float:
        return math.exp(self._log_derivative(x))


@dataclass(frozen=True, slots=True)
class SqrtSaturating(Technology):
    """``p(x) = s / (1 + s)`` with ``s = sqrt(x / scale)``."""

    family: ClassVar[str] = "sqrt"

    scale: float = 1.0
    _violations: Tuple[str, ...] = field(default=(), init=False, repr=False, compare=False)

    def parameter_violations(self) -> List[str]:
        if not _positive_finite(self.scale):
            return [f"scale c must be positive, got {self.scale!r}"]
        return []

    def params(self) -> Dict[str, float]:
        return {"scale": float(self.scale)}

    def _value(self, x: float) -> float:
        s = math.sqrt(x / self.scale)
        return s / (1.0 + s)

    def _complement(self, x: float) -> float:
        return 1.0 / (1.0 + math.sqrt(x / self.scale))

    def _derivative(self, x: float) -> float:
        s = math.sqrt(x / self.scale)
        return 1.0 / (2.0 * self.scale * s * (1.0 + s) ** 2)

    def _hazard_ratio(self, x: float) -> float:
        return 1.0 / (2.0 * x * (1.0 + math.sqrt(x / self.scale)))

    def _log_derivative(self, x: float) -> float:
        log_s = 0.5 * (math.log(x) - math.log(self.scale))
        return -math.log(2.0 * self.scale) - log_s - 2.0 * math.log1p(math.exp(log_s))


@dataclass(frozen=True, slots=True)
class PowerExponential(Technology):
    """``p(x) = A (1 - exp(-(x / rate) ** b))``."""

    family: ClassVar[str] = "powerexp"

    ceiling: float = 0.9
    rate: float = 1.0
    exponent: float = 0.5
    _violations: Tuple[str, ...] = field(default=(), init=False, repr=False, compare=False)

    def parameter_violations(self) -> List[str]:
        problems: List[str] = []
        if not (math.isfinite(self.ceiling) and 0.0 < self.ceiling < 1.0):
            problems.append(f"ceiling A outside (0,1): {self.ceiling!r}")
        if not _positive_finite(self.rate):
            problems.append(f"rate lambda must be positive, got {self.rate!r}")
        if not (math.isfinite(self.exponent) and 0.0 < self.exponent < 1.0):
            problems.append(f"exponent b outside (0,1): {self.exponent!r}")
        return problems

    def params(self) -> Dict[str, float]:
        return {"ceiling": float(self.ceiling), "rate": float(self.rate), "exponent": float(self.exponent)}

    def _u(self, x: float) -> float:
        return (x / self.rate) ** self.exponent

    def _value(self, x: float) -> float:
        return -self.ceiling * math.expm1(-self._u(x))

    def _complement(self, x: float) -> float:
        return (1.0 - self.ceiling) + self.ceiling * math.exp(-self._u(x))

    def _hazard_ratio(self, x: float) -> float:
        u = self._u(x)
        if u > 700.0:
            return 0.0
        return self.exponent * u / (x * math.expm1(u))

    def _log_derivative(self, x: float) -> float:
        log_u = self.exponent * (math.log(x) - math.log(self.rate))
        return math.log(self.ceiling * self.exponent) - math.exp(log_u) + log_u - math.log(x)


@dataclass(frozen=True, slots=True)
class SoftCappedLinear(Technology):
    """Power mean of a bent linear ramp and a ceiling.

    With ``y(x) = (x + bump * sqrt(x)) / rate`` the curve is
    ``p(x) = A * (1 + (A / y) ** s) ** (-1 / s)``: it follows ``y`` for small
    investments and bends onto the ceiling ``A`` with a sharpness ``s``.
    """

    family: ClassVar[str] = "softcap"

    ceiling: float = 0.9
    rate: float = 1.0
    bump: float = 0.01
    sharpness: float = 10.0
    _violations: Tuple[str, ...] = field(default=(), init=False, repr=False, compare=False)

    def parameter_violations(self) -> List[str]:
        problems: List[str] = []
        if not (math.isfinite(self.ceiling) and 0.0 < self.ceiling < 1.0):
            problems.append(f"ceiling A outside (0,1): {self.ceiling!r}")
        if not _positive_finite(self.rate):
            problems.append(f"rate lambda must be positive, got {self.rate!r}")
        if not _positive_finite(self.bump):
            problems.append(f"bump w must be positive, got {self.bump!r}")
        if not _positive_finite(self.sharpness):
            problems.append(f"sharpness s must be positive, got {self.sharpness!r}")
        return problems

    def params(self) -> Dict[str, float]:
        return {
            "ceiling": float(self.ceiling),
            "rate": float(self.rate),
            "bump": float(self.bump),
            "sharpness": float(self.sharpness),
        }

    def _log_ramp(self, x: float) -> float:
        root = math.sqrt(x)
        return math.log(root) + math.log(root + self.bump) - math.log(self.rate)

    def _log_value(self, x: float) -> Tuple[float, float]:
        """Return ``(log p, t)`` where ``t = s * (log A - log y)``."""

        t = self.sharpness * (math.log(self.ceiling) - self._log_ramp(x))
        return math.log(self.ceiling) - _log1pexp(t) / self.sharpness, t

    def _value(self, x: float) -> float:
        if x <= 0.0:
            return 0.0
        return math.exp(self._log_value(x)[0])

    def _complement(self, x: float) -> float:
        if x <= 0.0:
            return 1.0
        return -math.expm1(self._log_value(x)[0])

    def _ramp_elasticity_over_x(self, x: float) -> float:
        """Return ``y'(x) / y(x)``."""

        root = math.sqrt(x)
        return (1.0 + self.bump / (2.0 * root)) / (x + self.bump * root)

    def _hazard_ratio(self, x: float) -> float:
        _, t = self._log_value(x)
        return math.exp(-_log1pexp(-t)) * self._ramp_elasticity_over_x(x)

    def _log_derivative(self, x: float) -> float:
        log_p, t = self._log_value(x)
        return log_p - _log1pexp(-t) + math.log(self._ramp_elasticity_over_x(x))


FAMILIES: Dict[str, Type[Technology]] = {
    SqrtSaturating.family: SqrtSaturating,
    PowerExponential.family: PowerExponential,
    SoftCappedLinear.family: SoftCappedLinear,
}


def technology_from_dict(payload: Mapping[str, Any]) -> Technology:
    """Build a technology from its problem-file representation."""

    family = str(payload.get("family", "")).strip().lower()
    cls = FAMILIES.get(family)
    if cls is None:
        raise ModelValidationError(
            f"unknown technology family {payload.get('family')!r}",
            [f"family must be one of: {', '.join(sorted(FAMILIES))}"],
        )
    params = {key: value for key, value in payload.items() if key != "family"}
    expected = set(cls.__dataclass_fields__) - {"_violations"}
    unknown = sorted(set(params) - expected)
    if unknown:
        raise ModelValidationError(
            f"unexpected parameters for {family} technology", [f"unknown key {key!r}" for key in unknown]
        )
    try:
        return cls(**{key: float(value) for key, value in params.items()})
    except (TypeError, ValueError) as exc:
        raise ModelValidationError(f"malformed {family} technology parameters: {exc}") from exc


def shape_violations(tech: Technology, grid: np.ndarray = CHECK_GRID) -> List[str]:
    """Spot-check the curve's shape on a log-spaced investment grid.

    Flags a value that decreases, a derivative that increases, ``p(0) != 0``,
    values outside ``[0, 1)`` and a derivative that fails to grow as ``x -> 0``.
    Equal neighbouring values are accepted where double precision cannot
    resolve the increment, and equal derivatives where both have underflowed.
    """

    if not tech.is_valid:
        return tech.violations()

    problems: List[str] = []
    if tech.value(0.0) != 0.0:
        problems.append(f"p(0) = {tech.value(0.0)!r}, expected 0")

    values = np.array([tech.value(x) for x in grid])
    derivs = np.array([tech.derivative(x) for x in grid])
    steps = np.diff(grid)

    if np.any(values < 0.0) or np.any(values >= 1.0):
        problems.append("p leaves [0, 1) on the check grid")

    falling = np.flatnonzero(values[1:] < values[:-1])
    if falling.size:
        problems.append(f"p decreases near x = {grid[falling[0]]:.6g}")

    flat = np.flatnonzero(values[1:] == values[:-1])
    unexplained = [
        k for k in flat if derivs[k] * steps[k] > _TIE_TOLERANCE * max(values[k], 1.0)
    ]
    if unexplained:
        problems.append(f"p not strictly increasing near x = {grid[unexplained[0]]:.6g}")

    rising = np.flatnonzero(derivs[1:] > derivs[:-1])
    if rising.size:
        problems.append(f"p' increases near x = {grid[rising[0]]:.6g} (not concave)")

    near_zero = [tech.log_derivative(x) for x in _DIVERGENCE_POINTS]
    if any(later <= earlier for earlier, later in zip(near_zero, near_zero[1:])):
        problems.append("p' does not diverge as x -> 0")
    return problems


def tech_eval(t: Technology, x: float) -> float:
    """Return ``p(x)`` for ``x >= 0``."""

    if not math.isfinite(x) or x < 0.0:
        raise DomainError(f"investment must be finite and nonnegative, got {x!r}")
    return t.value(x)


def tech_deriv(t: Technology, x: float) -> float:
    """Return ``p'(x)`` for ``x > 0``."""

    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"derivative diverges at x = 0; need finite x > 0, got {x!r}")
    return t.derivative(x)


__all__ = [
    "CHECK_GRID",
    "FAMILIES",
    "PowerExponential",
    "SoftCappedLinear",
    "SqrtSaturating",
    "Technology",
    "shape_violations",
    "tech_deriv",
    "tech_eval",
    "technology_from_dict",
]
