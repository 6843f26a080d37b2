"""Exception hierarchy shared by the solver library and the CLI."""

from __future__ import annotations

from typing import Any, Dict, Iterable, List


class LiabilityChainError(Exception):
    """Base class for all library errors. ``exit_code`` drives the CLI status."""

    exit_code: int = 1


class ModelValidationError(LiabilityChainError, ValueError):
    """Raised when an input violates a model invariant."""

    exit_code = 1

    def __init__(self, message: str, violations: Iterable[str] | None = None) -> None:
        self.violations: List[str] = list(violations or [])
        if self.violations:
            message = f"{message}: {'; '.join(self.violations)}"
        super().__init__(message)


class DomainError(LiabilityChainError, ValueError):
    """Raised when an operation is evaluated outside its mathematical domain."""

    exit_code = 1


class ConvergenceError(LiabilityChainError, RuntimeError):
    """Raised when a numerical procedure fails to reach its tolerance."""

    exit_code = 2

    def __init__(
        self,
        message: str,
        *,
        partial: Any | None = None,
        diagnostics: Dict[str, Any] | None = None,
    ) -> None:
        super().__init__(message)
        self.partial = partial
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})


class CalibrationError(ConvergenceError):
    """Raised when no technology can be calibrated for the requested construction."""


class SimulationError(ConvergenceError):
    """Raised when a Monte Carlo instance fails; ``instance`` is its seed offset."""

    def __init__(self, message: str, *, instance: int, **kwargs: Any) -> None:
        super().__init__(message, **kwargs)
        self.instance = instance


__all__ = [
    "CalibrationError",
    "ConvergenceError",
    "DomainError",
    "LiabilityChainError",
    "ModelValidationError",
    "SimulationError",
]
