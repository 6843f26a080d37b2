"""End-to-end runs of the ``cascade`` command line."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterator

import numpy as np
import pandas as pd
import pytest
from scipy.optimize import bisect

from cascade import main
from liabilitychain import commands
from liabilitychain.model.technology import SqrtSaturating


@pytest.fixture(autouse=True)
def restore_root_logger() -> Iterator[None]:
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def json_dir(fixtures_dir: Path) -> Path:
    return fixtures_dir / "json"


@pytest.fixture
def csv_dir(fixtures_dir: Path) -> Path:
    return fixtures_dir / "csv"


def _run(out: Path, *argv: str) -> int:
    return main(["--out", str(out), *argv])


def test_single_agent_solve_matches_bisection(json_dir: Path, results_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Given one agent with loss 2 When solved efficiently Then the investment is the root of 2 p'(x) = 1."""

    tech = SqrtSaturating(scale=1.0)
    expected = bisect(lambda x: 2.0 * tech.derivative(x) - 1.0, 1e-9, 10.0, xtol=1e-15, rtol=1e-14)

    code = _run(results_dir, "solve", str(json_dir / "problem_single.json"))

    frame = pd.read_csv(results_dir / "solve_result.csv")
    assert code == 0
    assert frame.loc[0, "investment"] == pytest.approx(expected, rel=1e-10)
    assert (results_dir / "cost_report.csv").exists()
    assert f"wrote {results_dir / 'solve_result.csv'}" in capsys.readouterr().out


def test_first_best_equilibrium_reproduces_efficient_profile(json_dir: Path, tmp_path: Path) -> None:
    """Given phi* When the equilibrium is solved Then it matches the efficient profile."""

    problem = str(json_dir / "problem_systemic.json")

    assert _run(tmp_path / "efficient", "solve", problem) == 0
    assert _run(tmp_path / "equilibrium", "solve", problem, "--mode", "equilibrium", "--solution", "phi-star") == 0

    efficient = pd.read_csv(tmp_path / "efficient" / "solve_result.csv")["investment"].to_numpy()
    equilibrium = pd.read_csv(tmp_path / "equilibrium" / "solve_result.csv")["investment"].to_numpy()
    np.testing.assert_allclose(equilibrium, efficient, rtol=1e-6)


def test_unbalanced_matrix_is_rejected(
    json_dir: Path, csv_dir: Path, results_dir: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """Given a matrix whose first row misses five units When used for an equilibrium Then the run exits with 1."""

    code = _run(
        results_dir,
        "solve",
        str(json_dir / "problem_three.json"),
        "--mode",
        "equilibrium",
        "--solution",
        f"matrix:{csv_dir / 'matrix_unbalanced.csv'}",
    )

    assert code == 1
    assert "not a balanced solution" in capsys.readouterr().err
    assert not (results_dir / "solve_result.csv").exists()


def test_equilibrium_mode_requires_a_solution(json_dir: Path, results_dir: Path) -> None:
    """Given equilibrium mode without --solution When run Then the input error exits with 1."""

    assert _run(results_dir, "solve", str(json_dir / "problem_three.json"), "--mode", "equilibrium") == 1


def test_liability_from_weights_matches_reference_matrix(json_dir: Path, csv_dir: Path, results_dir: Path) -> None:
    """Given weights (1, 0.5, 0.9) When the liability matrix is written Then it equals the reference CSV."""

    code = _run(
        results_dir,
        "liability",
        str(json_dir / "problem_three.json"),
        "--solution",
        f"pi:{json_dir / 'weights_three.json'}",
    )

    written = pd.read_csv(results_dir / "liability.csv")
    reference = pd.read_csv(csv_dir / "matrix_pi.csv")
    assert code == 0
    assert list(written.columns) == ["disruptor", "1", "2", "3"]
    np.testing.assert_allclose(written.to_numpy(dtype=float), reference.to_numpy(dtype=float), atol=1e-12)


@pytest.mark.parametrize("solution", ["disruptor-pays", "own-loss", "phi-star"])
def test_liability_audit_passes_for_reference_solutions(json_dir: Path, results_dir: Path, solution: str) -> None:
    """Given a reference solution When audited Then every axiom holds in axioms.json."""

    code = _run(results_dir, "liability", str(json_dir / "problem_three.json"), "--solution", solution)

    audit = json.loads((results_dir / "axioms.json").read_text(encoding="utf-8"))
    assert code == 0
    assert audit["balance"] and audit["higher_direct"] and audit["independent_indirect"] and audit["nonnegative"]
    assert audit["located"] == []


def test_liability_audit_reports_violations_without_failing(json_dir: Path, csv_dir: Path, results_dir: Path) -> None:
    """Given an unbalanced matrix When audited Then the report names row 1 and the run still succeeds."""

    code = _run(
        results_dir,
        "liability",
        str(json_dir / "problem_three.json"),
        "--solution",
        f"matrix:{csv_dir / 'matrix_unbalanced.csv'}",
    )

    audit = json.loads((results_dir / "axioms.json").read_text(encoding="utf-8"))
    assert code == 0
    assert audit["balance"] is False
    assert audit["balance_violation"] == pytest.approx(5.0)


def test_unknown_solution_kind_exits_with_one(json_dir: Path, results_dir: Path) -> None:
    """Given an unknown solution spec When run Then the input error exits with 1."""

    assert _run(results_dir, "liability", str(json_dir / "problem_three.json"), "--solution", "random") == 1


def test_poa_rejects_epsilon_above_one(results_dir: Path) -> None:
    """Given epsilon 1.5 When the construction runs Then the configuration error exits with 1."""

    assert _run(results_dir, "poa", "--epsilon", "1.5") == 1
    assert not (results_dir / "poa.json").exists()


def test_poa_writes_certified_ratio(results_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Given three agents When the construction runs Then poa.json and stdout carry the same ratio report."""

    code = _run(results_dir, "poa", "--agents", "3", "--epsilon", "0.05", "--bound", "1.0")

    payload = json.loads((results_dir / "poa.json").read_text(encoding="utf-8"))
    assert code == 0
    assert payload["n"] == 3
    assert payload["ratio"] >= 1.0
    assert payload["ratio"] == pytest.approx(payload["c_hat"] / payload["c_star"])
    assert json.loads(capsys.readouterr().out) == payload


def test_simulation_is_reproducible_with_figure(tmp_path: Path) -> None:
    """Given the same seed When the study runs twice Then the CSVs are byte-identical and the figure is written."""

    argv = ("--seed", "5", "simulate", "--agents", "3", "--reps", "5", "--svg")

    assert main(["--out", str(tmp_path / "a"), *argv]) == 0
    assert main(["--out", str(tmp_path / "b"), *argv]) == 0

    first = (tmp_path / "a" / "simulation.csv").read_bytes()
    assert first == (tmp_path / "b" / "simulation.csv").read_bytes()
    assert first.decode("utf-8").splitlines()[0].startswith("agent,")
    assert (tmp_path / "a" / "figure.svg").read_text(encoding="utf-8").lstrip().startswith("<svg")


def test_invalid_tech_params_exit_with_one(results_dir: Path) -> None:
    """Given malformed technology JSON When simulating Then the input error exits with 1."""

    assert _run(results_dir, "simulate", "--reps", "2", "--tech-params", "{scale") == 1


def test_usage_errors_exit_with_one(results_dir: Path) -> None:
    """Given an unknown flag When parsing Then argparse exits with status 1."""

    with pytest.raises(SystemExit) as excinfo:
        _run(results_dir, "solve", "--frobnicate")

    assert excinfo.value.code == 1


def test_verify_passes_for_two_agents(results_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Given two-agent problems When verified Then every check passes and both reports are written."""

    code = _run(results_dir, "--seed", "3", "verify", "--sizes", "2")

    checks = json.loads((results_dir / "verify.json").read_text(encoding="utf-8"))
    assert code == 0
    assert all(check["pass"] for check in checks)
    assert {check["fingerprint"] for check in checks} == {"seed=3;n=2;draw=0"}
    assert capsys.readouterr().out.rstrip().endswith(f"{len(checks)}/{len(checks)} checks passed")


def test_efficient_solve_runs_the_solver_once(
    json_dir: Path, results_dir: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    """Given efficient mode with phi* When solved Then one efficient solve feeds both the profile and phi*."""

    calls: list[int] = []
    solve = commands.solve_efficient

    def counting(problem, opts):
        calls.append(problem.n)
        return solve(problem, opts)

    monkeypatch.setattr(commands, "solve_efficient", counting)

    code = _run(results_dir, "solve", str(json_dir / "problem_three.json"))

    costs = pd.read_csv(results_dir / "cost_report.csv")
    assert code == 0
    assert calls == [3]
    assert not costs.empty


@pytest.mark.slow
def test_verify_output_is_byte_identical_across_runs(tmp_path: Path) -> None:
    """Given the same seed When verify runs twice Then verify.json and verify.txt are byte-identical."""

    argv = ("--seed", "7", "verify", "--sizes", "2,3")

    assert main(["--out", str(tmp_path / "a"), *argv]) == 0
    assert main(["--out", str(tmp_path / "b"), *argv]) == 0

    for name in ("verify.json", "verify.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
