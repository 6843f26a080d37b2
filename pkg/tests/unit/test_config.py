"""Tests for :mod:`liabilitychain.config`."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from liabilitychain.config import SolverSettings, load_solver_settings
from liabilitychain.errors import ModelValidationError


def test_solver_settings_load_file_and_env(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Given a JSON config and an env override When SolverSettings.load runs Then both are merged."""

    config_path = tmp_path / "solver.json"
    config_path.write_text(json.dumps({"tolerance": 1e-9, "multistart": 2}), encoding="utf-8")
    monkeypatch.setenv("CASCADE_SOLVER_MULTISTART", "7")

    settings = SolverSettings.load(config_path)

    assert settings.tolerance == 1e-9
    assert settings.multistart == 7


def test_load_solver_settings_defaults_when_missing(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Given no config file When load_solver_settings runs Then defaults are returned."""

    for variable in ("CASCADE_SOLVER_TOLERANCE", "CASCADE_SOLVER_MAX_ITERATIONS", "CASCADE_SOLVER_MULTISTART"):
        monkeypatch.delenv(variable, raising=False)

    settings = load_solver_settings(tmp_path / "missing.json")

    assert settings == SolverSettings()


def test_malformed_config_falls_back_with_warning(tmp_path: Path, caplog: pytest.LogCaptureFixture) -> None:
    """Given undecodable JSON When loading Then a warning is logged and defaults apply."""

    config_path = tmp_path / "solver.json"
    config_path.write_text("{not json", encoding="utf-8")

    settings = SolverSettings.load(config_path)

    assert settings.max_outer_iterations == 500
    assert "Unable to decode solver config" in caplog.text


def test_invalid_env_override_is_a_validation_error(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Given a non-numeric tolerance override When loading Then ModelValidationError is raised."""

    monkeypatch.setenv("CASCADE_SOLVER_TOLERANCE", "tight")

    with pytest.raises(ModelValidationError):
        SolverSettings.load(tmp_path / "missing.json")


def test_solve_options_apply_overrides_and_validate() -> None:
    """Given CLI overrides When solve options are built Then None is ignored and bad values are rejected."""

    settings = SolverSettings(tolerance=1e-10, seed=4)

    options = settings.solve_options(tolerance=None, seed=9)

    assert options.tolerance == 1e-10
    assert options.seed == 9
    with pytest.raises(ModelValidationError):
        settings.solve_options(tolerance=-1.0)
