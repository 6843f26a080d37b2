"""Tests for :mod:`liabilitychain.experiments.poa`."""

from __future__ import annotations

import math

import pytest
from pydantic import ValidationError

from liabilitychain.errors import CalibrationError
from liabilitychain.experiments.poa import (
    calibrate_poa_technology,
    derivative_band,
    efficiency_loss,
    poa_delta,
    poa_problem,
    run_poa,
)
from liabilitychain.liability import make_disruptor_pays, make_own_loss
from liabilitychain.model.problem import Problem
from liabilitychain.model.technology import shape_violations
from liabilitychain.models import PoaConfig


def test_delta_solves_the_survival_equation() -> None:
    """Given n and epsilon When delta is computed Then (1 - delta) ** (n + 1) = 1 - epsilon."""

    delta = poa_delta(10, 0.01)

    assert (1.0 - delta) ** 11 == pytest.approx(0.99, rel=1e-14)


@pytest.mark.parametrize("n,epsilon", [(1, 0.2), (3, 0.05), (10, 0.01)])
def test_calibrated_technology_hits_value_and_slope_band(n: int, epsilon: float) -> None:
    """Given n and epsilon When the technology is calibrated Then p(1 - eps) = 1 - delta and the slope lies in the band."""

    tech = calibrate_poa_technology(n, epsilon)
    x0 = 1.0 - epsilon
    low, high = derivative_band(n, epsilon)

    assert tech.value(x0) == pytest.approx(1.0 - poa_delta(n, epsilon), abs=1e-10)
    assert low < tech.derivative(x0) < high
    assert shape_violations(tech) == []


def test_calibration_rejects_impossible_requests() -> None:
    """Given no agents When the calibration is requested Then CalibrationError is raised."""

    with pytest.raises(CalibrationError) as excinfo:
        calibrate_poa_technology(0, 0.01)

    assert excinfo.value.exit_code == 2


@pytest.mark.slow
def test_poa_run_certifies_a_large_ratio() -> None:
    """Given ten agents and epsilon 0.01 When the construction runs Then the certified ratio exceeds the bound."""

    result = run_poa(PoaConfig(n=10, epsilon=0.01, bound=5.0))

    assert result.certified
    assert result.ratio >= 5.0
    assert result.ratio > 10 * 0.99 / (1.0 + 9 * 0.01)
    assert result.bound_exceeded is True
    assert all(x > 0.99 for x in result.x_hat)
    assert result.absolute_gap == pytest.approx(result.c_hat - result.c_star)
    assert result.technology["family"] == "softcap"


def test_poa_problem_has_small_losses_then_one() -> None:
    """Given the construction config When the problem is built Then losses are (eps, ..., eps, 1)."""

    problem = poa_problem(PoaConfig(n=4, epsilon=0.02))

    assert problem.losses.tolist() == [0.02, 0.02, 0.02, 1.0]
    assert len({id(tech) for tech in problem.technologies}) == 1


def test_poa_config_rejects_epsilon_outside_unit_interval() -> None:
    """Given epsilon 1.5 When the config is built Then validation fails."""

    with pytest.raises(ValidationError):
        PoaConfig(epsilon=1.5)


def test_disruptor_pays_overinvests_and_own_loss_underinvests(three_agent_problem: Problem) -> None:
    """Given the two extreme solutions When compared with the efficient profile Then agent 1 over- resp. under-invests."""

    heavy = efficiency_loss(three_agent_problem, make_disruptor_pays(three_agent_problem.losses))
    light = efficiency_loss(three_agent_problem, make_own_loss(three_agent_problem.losses))

    assert 1 in heavy.overinvesting
    assert 1 in light.underinvesting
    assert heavy.ratio >= 1.0 and light.ratio >= 1.0
    assert math.isclose(heavy.absolute_gap, heavy.c_equilibrium - heavy.c_efficient)


@pytest.mark.slow
def test_poa_ratio_grows_with_the_chain_length() -> None:
    """Given epsilon 0.01 When the construction runs for 4, 8 and 16 agents Then the ratio increases with n."""

    ratios = [run_poa(PoaConfig(n=n, epsilon=0.01)).ratio for n in (4, 8, 16)]

    assert ratios[0] < ratios[1] < ratios[2]
