"""Structured JSON events and timed spans around solver runs."""

from __future__ import annotations

import json
import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, Optional

import numpy as np

from .errors import LiabilityChainError

__all__ = ["SolverSpan", "trace", "log_event", "safe_json"]


def safe_json(value: Any) -> Any:
    """Return ``value`` as plain JSON: arrays become lists, non-finite floats strings."""

    if isinstance(value, np.ndarray):
        return [safe_json(item) for item in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()

    if value is None or isinstance(value, (str, int, bool)):
        return value
    if isinstance(value, float):
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple, set)):
        return [safe_json(item) for item in value]
    if isinstance(value, dict):
        return {str(key): safe_json(val) for key, val in value.items()}
    # technologies, profiles and result records
    if callable(getattr(value, "to_dict", None)):
        return safe_json(value.to_dict())
    return repr(value)


def log_event(logger: logging.Logger, level: int, event: str, **fields: Any) -> None:
    """Emit ``event`` and its non-``None`` fields as one sorted-key JSON line."""

    if not logger.isEnabledFor(level):
        return
    payload: Dict[str, Any] = {"event": event}
    payload.update({key: safe_json(value) for key, value in fields.items() if value is not None})
    logger.log(level, json.dumps(payload, ensure_ascii=False, sort_keys=True))


@dataclass(slots=True)
class SolverSpan:
    """A running span. Outcome fields recorded on it are logged with ``trace.end``."""

    name: str
    logger: logging.Logger
    fields: Dict[str, Any]
    start_time: float
    outcome: Dict[str, Any] = field(default_factory=dict)

    def record(self, **outcome: Any) -> None:
        self.outcome.update(outcome)

    def elapsed_ms(self) -> float:
        return round((time.perf_counter() - self.start_time) * 1000, 2)


@contextmanager
def trace(name: str, *, logger: Optional[logging.Logger] = None, **fields: Any) -> Iterator[SolverSpan]:
    """Log ``trace.start`` and ``trace.end`` (or ``trace.error``) around a block.

    Library errors add their exit code and, for convergence failures, the
    solver diagnostics to the error event.
    """

    logger = logger or logging.getLogger("trace")
    span = SolverSpan(name=name, logger=logger, fields=dict(fields), start_time=time.perf_counter())
    log_event(logger, logging.INFO, "trace.start", trace=name, **span.fields)
    try:
        yield span
    except Exception as exc:
        failure: Dict[str, Any] = {"error": repr(exc)}
        if isinstance(exc, LiabilityChainError):
            failure["exit_code"] = exc.exit_code
            failure["diagnostics"] = getattr(exc, "diagnostics", None) or None
        log_event(
            logger,
            logging.ERROR,
            "trace.error",
            trace=name,
            duration_ms=span.elapsed_ms(),
            **{**span.fields, **span.outcome, **failure},
        )
        raise
    log_event(
        logger,
        logging.INFO,
        "trace.end",
        trace=name,
        duration_ms=span.elapsed_ms(),
        **{**span.fields, **span.outcome},
    )
