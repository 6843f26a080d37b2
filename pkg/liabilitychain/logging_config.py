"""Root logger setup for the ``cascade`` runs.

Every record carries the subcommand and seed of the run that produced it, so
log lines from solver sweeps, simulation instances and verification draws can
be matched to the artefacts in ``--out``.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass
from typing import Optional

_LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(command)s seed=%(seed)s | %(message)s"


@dataclass(slots=True)
class RunContext:
    """Subcommand and seed stamped onto every log record."""

    command: str = "-"
    seed: Optional[int] = None


class RunContextFilter(logging.Filter):
    """Attach ``command`` and ``seed`` to records that do not set them."""

    def __init__(self, context: RunContext) -> None:
        super().__init__()
        self.context = context

    def filter(self, record: logging.LogRecord) -> bool:
        if not hasattr(record, "command"):
            record.command = self.context.command
        if not hasattr(record, "seed"):
            record.seed = "-" if self.context.seed is None else self.context.seed
        return True


def _parse_level(level: int | str) -> int:
    if isinstance(level, int):
        return level
    parsed = logging.getLevelName(level.strip().upper())
    return parsed if isinstance(parsed, int) else logging.INFO


def configure_logging(
    level: int | str = logging.INFO,
    stream: Optional[logging.Handler] = None,
    *,
    command: Optional[str] = None,
    seed: Optional[int] = None,
) -> RunContext:
    """Install a single handler on the root logger and return its run context.

    ``stream`` defaults to a ``sys.stderr`` handler; stdout is reserved for
    command results. Earlier handlers are removed.
    """

    context = RunContext(command=command or "-", seed=seed)
    handler: logging.Handler = stream if stream is not None else logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(_LOG_FORMAT))
    handler.addFilter(RunContextFilter(context))

    root_logger = logging.getLogger()
    for existing in list(root_logger.handlers):
        root_logger.removeHandler(existing)
    root_logger.setLevel(_parse_level(level))
    root_logger.addHandler(handler)
    return context


__all__ = ["RunContext", "RunContextFilter", "configure_logging"]
