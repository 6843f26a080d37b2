"""Shared pytest fixtures for the cascade-liability test-suite."""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Callable

import numpy as np
import pytest

ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from liabilitychain.model.problem import InvestmentProfile, Problem
from liabilitychain.model.technology import PowerExponential, SqrtSaturating
from liabilitychain.models import SolveOptions


@pytest.fixture
def fixtures_dir() -> Path:
    """Return the root directory containing reusable fixture files."""

    return Path(__file__).parent / "fixtures"


@pytest.fixture
def json_fixture(fixtures_dir: Path) -> Callable[[str], object]:
    """Return a callable that loads JSON fixture payloads by name."""

    def _load(name: str) -> object:
        path = fixtures_dir / "json" / name
        return json.loads(path.read_text(encoding="utf-8"))

    return _load


@pytest.fixture
def sqrt_tech() -> SqrtSaturating:
    """Return the unit-scale square-root technology used in the simulations."""

    return SqrtSaturating(scale=1.0)


@pytest.fixture
def three_agent_problem(sqrt_tech: SqrtSaturating) -> Problem:
    """Return the chain with losses (10, 20, 30) and square-root technologies."""

    return Problem(losses=np.array([10.0, 20.0, 30.0]), technologies=(sqrt_tech,) * 3)


@pytest.fixture
def mixed_problem() -> Problem:
    """Return a four-agent chain mixing both technology families."""

    return Problem(
        losses=np.array([12.0, 40.0, 7.5, 25.0]),
        technologies=(
            SqrtSaturating(scale=1.5),
            PowerExponential(ceiling=0.95, rate=1.2, exponent=0.5),
            SqrtSaturating(scale=0.7),
            PowerExponential(ceiling=0.9, rate=0.8, exponent=0.4),
        ),
    )


@pytest.fixture
def interior_profile() -> InvestmentProfile:
    """Return a strictly positive four-agent investment profile."""

    return InvestmentProfile(np.array([1.3, 0.6, 2.1, 0.9]))


@pytest.fixture
def solve_options() -> SolveOptions:
    """Return the default solver settings with a fixed multistart seed."""

    return SolveOptions(seed=3)


@pytest.fixture
def results_dir(tmp_path: Path) -> Path:
    """Return an output directory for command runs."""

    out = tmp_path / "results"
    out.mkdir(parents=True, exist_ok=True)
    return out
