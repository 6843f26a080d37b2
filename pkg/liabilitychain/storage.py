"""Persistence helpers: atomic writers, CSV tables and input readers."""

from __future__ import annotations

import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, List

import jsonschema
import numpy as np
import pandas as pd

from .errors import ModelValidationError
from .liability import LiabilityMatrix, PiWeights
from .model.problem import Problem, problem_from_dict
from .models import CostReport, Serializable, SolveResult
from .tracing import log_event

FLOAT_FORMAT = "%.17g"

_SCHEMA_PATH = Path(__file__).resolve().parent / "schemas" / "problem.schema.json"

_LOGGER = logging.getLogger("storage")


def write_text(content: str, path: Path) -> Path:
    """Write ``content`` atomically: a temporary sibling file is renamed over ``path``."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    log_event(
        _LOGGER,
        logging.DEBUG,
        "storage.write.start",
        path=str(path),
        bytes=len(content.encode("utf-8")),
    )
    handle = tempfile.NamedTemporaryFile(
        "w", encoding="utf-8", newline="", dir=path.parent, prefix=f".{path.name}.", delete=False
    )
    try:
        with handle:
            handle.write(content)
        os.replace(handle.name, path)
    except BaseException:
        Path(handle.name).unlink(missing_ok=True)
        raise
    log_event(_LOGGER, logging.INFO, "storage.write.finish", path=str(path))
    return path


def dumps_json(data: Any) -> str:
    if isinstance(data, Serializable):
        data = data.to_dict()
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(data: Any, path: Path) -> Path:
    """Serialise ``data`` (a :class:`Serializable` or plain JSON value) to ``path``."""

    return write_text(dumps_json(data), path)


def frame_to_csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def write_table(frame: pd.DataFrame, path: Path) -> Path:
    """Write a table as CSV with 17 significant digits."""

    return write_text(frame_to_csv(frame), path)


# ----------------------------------------------------------------------
# Table layouts
# ----------------------------------------------------------------------
def solve_result_frame(result: SolveResult) -> pd.DataFrame:
    n = len(result.profile)
    return pd.DataFrame(
        {
            "agent": np.arange(1, n + 1),
            "investment": result.profile.x,
            "residual": result.residuals,
        }
    )


def cost_report_frame(report: CostReport) -> pd.DataFrame:
    """Per-agent rows plus a trailing ``none`` row with the no-disruption probability."""

    n = report.per_agent.size
    rows: List[dict] = [
        {
            "agent": str(i + 1),
            "expected_cost": float(report.per_agent[i]),
            "investment": float(report.investment[i]),
            "p_disrupt": float(report.disruptor_probs[i]),
        }
        for i in range(n)
    ]
    rows.append({"agent": "none", "expected_cost": None, "investment": None, "p_disrupt": float(report.disruptor_probs[n])})
    return pd.DataFrame(rows, columns=["agent", "expected_cost", "investment", "p_disrupt"])


def liability_frame(phi: LiabilityMatrix) -> pd.DataFrame:
    frame = pd.DataFrame(phi.phi, columns=[str(j) for j in range(1, phi.n + 1)])
    frame.insert(0, "disruptor", np.arange(1, phi.n + 1))
    return frame


# ----------------------------------------------------------------------
# Readers
# ----------------------------------------------------------------------
def _load_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ModelValidationError(f"input file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ModelValidationError(f"malformed JSON in {path}: {exc}") from exc


def read_problem(path: Path) -> Problem:
    """Load and schema-check a problem file."""

    payload = _load_json(path)
    schema = json.loads(_SCHEMA_PATH.read_text(encoding="utf-8"))
    try:
        jsonschema.validate(instance=payload, schema=schema)
    except jsonschema.ValidationError as exc:
        location = "/".join(str(part) for part in exc.absolute_path) or "<root>"
        raise ModelValidationError(f"problem file {path} is malformed", [f"{location}: {exc.message}"]) from exc
    problem = problem_from_dict(payload)
    log_event(_LOGGER, logging.DEBUG, "storage.read_problem", path=str(path), n=problem.n)
    return problem


def read_pi_weights(path: Path, n: int) -> PiWeights:
    """Load a JSON array of ``n`` weights."""

    payload = _load_json(path)
    if not isinstance(payload, list) or not all(isinstance(value, (int, float)) and not isinstance(value, bool) for value in payload):
        raise ModelValidationError(f"weights file {path} must hold a JSON array of numbers")
    if len(payload) != n:
        raise ModelValidationError(f"weights file {path} has {len(payload)} entries, expected {n}")
    try:
        return PiWeights(np.asarray(payload, dtype=float))
    except ValueError as exc:
        raise ModelValidationError(str(exc)) from exc


def read_liability_matrix(path: Path, losses: np.ndarray) -> LiabilityMatrix:
    """Load a matrix CSV with header ``disruptor,1,...,n``."""

    n = int(np.asarray(losses).size)
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError as exc:
        raise ModelValidationError(f"input file not found: {path}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ModelValidationError(f"malformed matrix CSV {path}: {exc}") from exc

    expected = ["disruptor"] + [str(j) for j in range(1, n + 1)]
    if [str(column).strip() for column in frame.columns] != expected:
        raise ModelValidationError(
            f"matrix CSV {path} must have header {','.join(expected)}",
            [f"found {','.join(str(column) for column in frame.columns)}"],
        )
    if frame.shape[0] != n or list(frame["disruptor"]) != list(range(1, n + 1)):
        raise ModelValidationError(f"matrix CSV {path} needs one row per disruptor 1..{n} in order")
    try:
        values = frame[expected[1:]].to_numpy(dtype=float)
    except ValueError as exc:
        raise ModelValidationError(f"matrix CSV {path} holds non-numeric entries") from exc
    return LiabilityMatrix(phi=values, losses=losses)


__all__ = [
    "FLOAT_FORMAT",
    "cost_report_frame",
    "dumps_json",
    "frame_to_csv",
    "liability_frame",
    "read_liability_matrix",
    "read_pi_weights",
    "read_problem",
    "solve_result_frame",
    "write_json",
    "write_table",
    "write_text",
]
