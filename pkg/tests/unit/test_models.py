"""Tests for dataclasses and run configurations in :mod:`liabilitychain.models`."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from liabilitychain.model.problem import InvestmentProfile
from liabilitychain.models import CheckResult, RunConfig, SolveOptions, SolveResult, VerificationReport


def test_serializable_to_dict_handles_arrays_and_nested(tmp_path: Path) -> None:
    """Given a solve result with arrays and a profile When to_dict is called Then plain JSON values are produced."""

    result = SolveResult(
        profile=InvestmentProfile(np.array([0.5, 0.25])),
        residuals=np.array([1e-12, 0.0]),
        converged=True,
        iterations=3,
        tolerance=1e-10,
    )

    as_dict = result.to_dict()
    result.to_json(tmp_path / "result.json")

    assert as_dict["profile"] == {"x": [0.5, 0.25]}
    assert as_dict["residuals"] == [1e-12, 0.0]
    assert json.loads((tmp_path / "result.json").read_text(encoding="utf-8"))["converged"] is True


def test_verification_report_renders_pass_and_fail_lines() -> None:
    """Given one passing and one failing check When rendered Then each gets a status line and a summary."""

    report = VerificationReport(
        checks=[
            CheckResult("axioms.pi_round_trip", True, 1e-16, 1e-12, "seed=1;n=2;draw=0"),
            CheckResult("first_best.forward", False, 0.1, 1e-6, "seed=1;n=2;draw=0", "gap"),
        ]
    )

    text = report.to_text()

    assert not report.passed
    assert text.splitlines()[0].startswith("PASS axioms.pi_round_trip [seed=1;n=2;draw=0]")
    assert text.splitlines()[1].startswith("FAIL first_best.forward")
    assert text.rstrip().endswith("1/2 checks passed")
    assert report.to_list()[1]["pass"] is False


def test_run_config_normalises_command_and_log_level() -> None:
    """Given mixed-case input When RunConfig is built Then command and log level are normalised."""

    config = RunConfig(command=" Verify ", log_level="debug")

    assert config.command == "verify"
    assert config.log_level == "DEBUG"
    assert config.out == Path("results")


@pytest.mark.parametrize(
    "payload",
    [{"command": "serve"}, {"command": "solve", "seed": -1}, {"command": "solve", "tol": 0.0}],
)
def test_run_config_rejects_invalid_flags(payload: dict) -> None:
    """Given an unknown command or out-of-range flag When RunConfig is built Then validation fails."""

    with pytest.raises(ValidationError):
        RunConfig(**payload)


def test_solve_options_enforce_ranges() -> None:
    """Given a bracket growth of one When SolveOptions is built Then validation fails."""

    with pytest.raises(ValidationError):
        SolveOptions(bracket_growth=1.0)
    assert SolveOptions().multistart == 5
