"""Configuration helpers for the cascade-liability solvers."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict

from pydantic import ValidationError

from .errors import ModelValidationError
from .models import SolveOptions

_LOGGER = logging.getLogger(__name__)
_PROJECT_ROOT = Path(__file__).resolve().parent.parent
_DEFAULT_CONFIG_PATH = _PROJECT_ROOT / "configs" / "solver.json"

_ENV_OVERRIDES: Dict[str, tuple[str, Callable[[str], Any]]] = {
    "CASCADE_SOLVER_TOLERANCE": ("tolerance", float),
    "CASCADE_SOLVER_MAX_ITERATIONS": ("max_outer_iterations", int),
    "CASCADE_SOLVER_MULTISTART": ("multistart", int),
}


@dataclass(slots=True)
class SolverSettings:
    """User-provided solver defaults, merged from file and environment."""

    tolerance: float = 1e-10
    max_outer_iterations: int = 500
    bracket_growth: float = 2.0
    multistart: int = 5
    seed: int = 0

    @classmethod
    def load(cls, path: Path | None = None) -> "SolverSettings":
        """Load configuration from disk and environment overrides."""

        config_path = path or _DEFAULT_CONFIG_PATH
        data: Dict[str, Any] = {}

        if config_path.exists():
            try:
                data = json.loads(config_path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                _LOGGER.warning("Unable to decode solver config at %s: %s", config_path, exc)
                data = {}
        if not isinstance(data, dict):
            _LOGGER.warning("Solver config at %s is not a JSON object; using defaults", config_path)
            data = {}

        for variable, (key, convert) in _ENV_OVERRIDES.items():
            raw = os.environ.get(variable)
            if raw is None or not raw.strip():
                continue
            try:
                data[key] = convert(raw.strip())
            except ValueError as exc:
                raise ModelValidationError(f"{variable} is not a valid {convert.__name__}: {raw!r}") from exc

        defaults = cls()
        filtered: Dict[str, Any] = {
            "tolerance": float(data.get("tolerance", defaults.tolerance)),
            "max_outer_iterations": int(data.get("max_outer_iterations", defaults.max_outer_iterations)),
            "bracket_growth": float(data.get("bracket_growth", defaults.bracket_growth)),
            "multistart": int(data.get("multistart", defaults.multistart)),
            "seed": int(data.get("seed", defaults.seed)),
        }
        return cls(**filtered)

    def solve_options(self, **overrides: Any) -> SolveOptions:
        """Return validated :class:`SolveOptions`; ``None`` overrides are ignored."""

        payload: Dict[str, Any] = {
            "tolerance": self.tolerance,
            "max_outer_iterations": self.max_outer_iterations,
            "bracket_growth": self.bracket_growth,
            "multistart": self.multistart,
            "seed": self.seed,
        }
        payload.update({key: value for key, value in overrides.items() if value is not None})
        try:
            return SolveOptions(**payload)
        except ValidationError as exc:
            raise ModelValidationError("invalid solver settings", [str(error["msg"]) for error in exc.errors()]) from exc


def load_solver_settings(path: Path | None = None) -> SolverSettings:
    """Helper to load the solver configuration."""

    return SolverSettings.load(path)


__all__ = ["SolverSettings", "load_solver_settings"]
