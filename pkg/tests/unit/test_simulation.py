"""Tests for :mod:`liabilitychain.experiments.simulation` and the figure renderer."""

from __future__ import annotations

import numpy as np
import pytest
from pydantic import ValidationError

from liabilitychain.experiments.figure import render_figure
from liabilitychain.experiments.simulation import (
    COLUMNS,
    draw_problem,
    instances_frame,
    records_frame,
    run_simulation,
)
from liabilitychain.models import SimConfig


@pytest.fixture
def small_config() -> SimConfig:
    """Return a short study over four agents."""

    return SimConfig(n=4, reps=12, seed=11)


def test_simulation_is_deterministic(small_config: SimConfig) -> None:
    """Given a fixed seed When the study runs twice Then the means are identical."""

    first = records_frame(run_simulation(small_config))
    second = records_frame(run_simulation(small_config))

    assert list(first.columns) == list(COLUMNS)
    assert first.equals(second)


def test_instance_draws_are_independent_of_order(small_config: SimConfig) -> None:
    """Given the instance stream When instance 5 is drawn alone Then it matches the draw inside the study."""

    alone = draw_problem(small_config, 5)
    again = draw_problem(small_config, 5)

    np.testing.assert_array_equal(alone.losses, again.losses)
    assert np.all((alone.losses >= 1.0) & (alone.losses <= 100.0))
    assert not np.array_equal(alone.losses, draw_problem(small_config, 6).losses)


def test_first_best_records_satisfy_the_cost_identity(small_config: SimConfig) -> None:
    """Given first-best liabilities When averaged Then later agents' costs equal indirect liability plus investment."""

    frame = records_frame(run_simulation(small_config))

    later = frame.iloc[1:]
    np.testing.assert_allclose(
        later["expected_cost"], later["indirect_liability"] + later["investment"], rtol=1e-9
    )
    assert frame.loc[0, "indirect_liability"] == 0.0
    assert frame.loc[0, "p_indirect"] == 0.0
    assert np.all(frame["direct_liability"] >= frame["indirect_liability"])
    assert frame["p_direct"].sum() < 1.0


def test_worker_count_does_not_change_results(small_config: SimConfig) -> None:
    """Given two worker processes When the study runs Then the means match the serial run exactly."""

    serial = records_frame(run_simulation(small_config))
    parallel = records_frame(run_simulation(small_config.model_copy(update={"workers": 2})))

    assert serial.equals(parallel)


def test_per_instance_records_are_kept_on_request(small_config: SimConfig) -> None:
    """Given per-instance output When the study runs Then one row per instance and agent is available."""

    result = run_simulation(small_config.model_copy(update={"per_instance": True}))

    frame = instances_frame(result)

    assert len(frame) == small_config.reps * small_config.n
    assert list(frame.columns[:2]) == ["instance", "agent"]
    with pytest.raises(ValueError):
        instances_frame(run_simulation(small_config))


def test_sim_config_rejects_inverted_loss_bounds() -> None:
    """Given loss_low above loss_high When the config is built Then validation fails."""

    with pytest.raises(ValidationError):
        SimConfig(loss_low=10.0, loss_high=1.0)


def test_sim_config_accepts_technology_dict() -> None:
    """Given a technology dict When the config is built Then it is converted into a technology."""

    config = SimConfig(technology={"family": "powerexp", "ceiling": 0.9, "rate": 1.0, "exponent": 0.5})

    assert config.technology.family == "powerexp"


def test_figure_has_two_panels_and_six_series(small_config: SimConfig) -> None:
    """Given simulation means When the figure is rendered Then an SVG with six polylines is produced."""

    svg = render_figure(run_simulation(small_config))

    assert svg.lstrip().startswith("<svg")
    assert svg.count("<polyline") == 6
    assert "Investments and liability probabilities" in svg
    assert "Expected costs and liabilities" in svg


@pytest.mark.slow
def test_eight_agent_study_has_the_expected_shape() -> None:
    """Given eight agents and 1000 replications When averaged Then investments, direct liabilities, p_direct and costs fall along the chain.

    The probability of having to pay indirect liability rises along the chain.
    """

    frame = records_frame(run_simulation(SimConfig(n=8, reps=1000, seed=1)))

    for column in ("investment", "direct_liability", "p_direct", "expected_cost"):
        assert np.all(np.diff(frame[column].to_numpy()) < 0.0), column
    assert np.all(np.diff(frame["p_indirect"].to_numpy()) > 0.0)
