"""Tests for :mod:`liabilitychain.liability`."""

from __future__ import annotations

import numpy as np
import pytest

from liabilitychain.errors import DomainError, ModelValidationError
from liabilitychain.liability import (
    LiabilityMatrix,
    PiWeights,
    check_axioms,
    first_best_direct_liabilities,
    make_disruptor_pays,
    make_own_loss,
    make_phi_star,
    make_pi_solution,
    net_harm,
    pi_from_fault_rates,
    rebalance_indirect,
    recover_pi,
    scale_direct,
)
from liabilitychain.model.problem import InvestmentProfile, Problem

LOSSES = np.array([10.0, 20.0, 30.0])


def test_disruptor_pays_puts_systemic_loss_on_the_diagonal() -> None:
    """Given losses (1, 2, 3) When the disruptor pays Then the diagonal is (6, 5, 3) and the rest is zero."""

    phi = make_disruptor_pays([1.0, 2.0, 3.0])

    assert phi.direct.tolist() == [6.0, 5.0, 3.0]
    assert np.count_nonzero(phi.phi - np.diag(phi.direct)) == 0


def test_pi_solution_matches_hand_computation() -> None:
    """Given weights (., 0.5, 0.9) and losses (10, 20, 30) When the weight family is built Then entries match."""

    phi = make_pi_solution(LOSSES, [1.0, 0.5, 0.9])

    expected = np.array(
        [
            [33.5, 23.5, 3.0],
            [0.0, 47.0, 3.0],
            [0.0, 0.0, 30.0],
        ]
    )
    np.testing.assert_allclose(phi.phi, expected, rtol=0.0, atol=1e-12)


def test_own_loss_charges_each_agent_its_own_loss() -> None:
    """Given losses When every agent pays its own loss Then each column holds that loss on and above the diagonal."""

    phi = make_own_loss(LOSSES)

    np.testing.assert_array_equal(phi.phi, np.triu(np.broadcast_to(LOSSES, (3, 3))))


@pytest.mark.parametrize(
    "phi",
    [make_disruptor_pays(LOSSES), make_own_loss(LOSSES), make_pi_solution(LOSSES, [1.0, 0.2, 0.7])],
    ids=["disruptor-pays", "own-loss", "weights"],
)
def test_reference_solutions_satisfy_every_axiom(phi: LiabilityMatrix) -> None:
    """Given a weight-family solution When audited Then balance, nonnegativity and both axioms hold."""

    report = check_axioms(phi)

    assert report.passed
    assert report.located == []


def test_recover_pi_round_trips_the_weights() -> None:
    """Given a weight-family solution When the weights are recovered Then they match (pi_1 set to one)."""

    weights = [0.3, 0.25, 0.8]

    recovered = recover_pi(make_pi_solution(LOSSES, weights), strict=True)

    np.testing.assert_allclose(recovered.pi, [1.0, 0.25, 0.8], atol=1e-12)


def test_check_axioms_locates_an_unbalanced_row() -> None:
    """Given a row paying less than the downstream loss When audited Then the row is named."""

    matrix = make_disruptor_pays(LOSSES).phi.copy()
    matrix[0, 0] = 55.0

    report = check_axioms(LiabilityMatrix(phi=matrix, losses=LOSSES))

    assert not report.balance
    assert report.balance_violation == pytest.approx(5.0)
    assert any(entry.startswith("row 1: unbalanced") for entry in report.located)


def test_check_axioms_detects_dependent_indirect_liabilities() -> None:
    """Given indirect liabilities that depend on the disruptor When audited Then independence fails."""

    matrix = make_pi_solution(LOSSES, [1.0, 0.5, 0.9]).phi.copy()
    # Row 1 moves one unit from agent 3 to agent 2; row 2 is unchanged.
    matrix[0, 1] += 1.0
    matrix[0, 2] -= 1.0

    report = check_axioms(LiabilityMatrix(phi=matrix, losses=LOSSES))

    assert report.balance
    assert not report.independent_indirect
    with pytest.raises(DomainError):
        recover_pi(LiabilityMatrix(phi=matrix, losses=LOSSES))


def test_rebalance_indirect_keeps_row_total_and_diagonal() -> None:
    """Given a row's indirect liabilities When moved onto the last agent Then the diagonal and the total stay put."""

    phi = make_pi_solution(LOSSES, [1.0, 0.5, 0.9])

    moved = rebalance_indirect(phi, 1, [0.0, 1.0])

    assert moved.entry(1, 1) == phi.entry(1, 1)
    assert moved.entry(1, 2) == 0.0
    assert moved.entry(1, 3) == pytest.approx(26.5)
    assert check_axioms(moved).balance


def test_scale_direct_absorbs_the_change_in_indirect_entries() -> None:
    """Given a diagonal scaled by 1.05 When rebalanced Then the row stays balanced."""

    phi = make_pi_solution(LOSSES, [1.0, 0.5, 0.9])

    scaled = scale_direct(phi, 1, 1.05)

    assert scaled.entry(1, 1) == pytest.approx(33.5 * 1.05)
    assert scaled.phi[0].sum() == pytest.approx(60.0)
    with pytest.raises(DomainError):
        scale_direct(phi, 1, 2.0)
    with pytest.raises(DomainError):
        scale_direct(phi, 3, 1.05)


def test_phi_star_direct_liabilities_equal_net_harm(three_agent_problem: Problem) -> None:
    """Given a positive profile When the first-best liabilities are built Then they equal the net harm."""

    x = InvestmentProfile(np.array([2.0, 1.5, 3.0]))

    phi = make_phi_star(three_agent_problem, x)

    np.testing.assert_allclose(phi.direct, net_harm(three_agent_problem, x), rtol=1e-12)
    np.testing.assert_allclose(phi.direct, first_best_direct_liabilities(three_agent_problem, x), rtol=1e-12)
    assert check_axioms(phi).passed


def test_phi_star_requires_positive_investments(three_agent_problem: Problem) -> None:
    """Given a zero investment When phi* is requested Then DomainError is raised."""

    with pytest.raises(DomainError):
        make_phi_star(three_agent_problem, InvestmentProfile(np.array([1.0, 0.0, 1.0])))


def test_weights_and_matrices_are_validated() -> None:
    """Given weights outside [0, 1] or a non-square matrix When constructed Then the input is rejected."""

    with pytest.raises(DomainError):
        PiWeights(np.array([1.0, 1.2]))
    with pytest.raises(ModelValidationError):
        LiabilityMatrix(phi=np.zeros((2, 3)), losses=np.ones(2))


def test_fault_rates_translate_to_weights() -> None:
    """Given a ten percent fault risk When converted Then the weight is nine tenths."""

    assert pi_from_fault_rates([0.0, 0.1]).pi.tolist() == pytest.approx([1.0, 0.9])


def test_weights_round_trip_on_random_chains() -> None:
    """Given 1000 random losses and weights When the weight solution is built Then it passes the audit and returns its weights."""

    rng = np.random.default_rng(2718)

    for _ in range(1000):
        n = int(rng.integers(1, 9))
        losses = 10.0 ** rng.uniform(-3.0, 3.0, size=n)
        pi = rng.random(n)

        phi = make_pi_solution(losses, pi)
        recovered = recover_pi(phi, strict=True)

        assert check_axioms(phi).passed
        assert recovered.pi[0] == 1.0
        np.testing.assert_allclose(recovered.pi[1:], pi[1:], rtol=0.0, atol=1e-12)


def _violate(phi: LiabilityMatrix, kind: int, delta: float) -> LiabilityMatrix:
    matrix = phi.phi.copy()
    if kind == 0:
        # unbalanced row
        matrix[0, 0] += delta
    elif kind == 1:
        # agent 3's indirect liability depends on the disruptor; row total kept
        matrix[0, 2] += delta
        matrix[0, 0] -= delta
    elif kind == 2:
        # indirect liability above the direct one; row total kept
        excess = matrix[1, 1] - matrix[0, 1] + delta
        matrix[0, 1] += excess
        matrix[0, 0] -= excess
    elif kind == 3:
        # negative indirect liability; row total kept
        matrix[0, 0] += matrix[0, 1] + delta
        matrix[0, 1] = -delta
    else:
        # liability charged to an agent that stopped the disruption
        matrix[2, 0] = delta
        matrix[2, 2] -= delta
    return LiabilityMatrix(phi=matrix, losses=phi.losses)


def test_constructed_axiom_violations_are_all_detected() -> None:
    """Given 100 weight solutions with one deliberate defect each When audited Then every defect is flagged."""

    rng = np.random.default_rng(3141)

    for case in range(100):
        n = 3 + case % 4
        losses = rng.uniform(1.0, 100.0, size=n)
        phi = make_pi_solution(losses, rng.random(n))
        delta = 1e-3 * float(np.sum(losses)) * (1.0 + rng.random())

        report = check_axioms(_violate(phi, case % 5, delta))

        assert not report.passed, (case, report)
        assert report.located


def test_axiom_tolerance_scales_with_the_total_loss() -> None:
    """Given losses (1, 1000) When audited Then the tolerance is 1e-9 of the total loss, not of any single row.

    An imbalance of 5e-7 in the small first row is within that tolerance.
    """

    losses = np.array([1.0, 1000.0])
    phi = make_own_loss(losses)
    shifted = LiabilityMatrix(phi=phi.phi + np.array([[5e-7, 0.0], [0.0, 0.0]]), losses=losses)

    report = check_axioms(shifted)

    assert report.tolerance == pytest.approx(1e-9 * 1001.0)
    assert report.balance
    assert report.balance_violation == pytest.approx(5e-7)
