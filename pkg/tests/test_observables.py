from __future__ import annotations

import math

import numpy as np
import pytest

from bell_stabilizer.exceptions import InvariantViolationError
from bell_stabilizer.experiments import RandomDensityMatrix
from bell_stabilizer.models import TSIRELSON_BOUND
from bell_stabilizer.observables import (
    BellState,
    ChshOperator,
    ChshOperatorCompact,
    ChshValue,
    Diagnostics,
    Fidelity,
    Observe,
)
from bell_stabilizer.operators import DensityState, FockState, KronStates, QubitState, StateVector


def WithCavity(qubits: DensityState, ncav: int = 4) -> DensityState:
    vacuum = FockState(0, ncav).ToDensity().rho
    return DensityState(np.kron(qubits.rho, vacuum), dims=(2, 2, ncav))


def test_singlet_is_maximal() -> None:
    singlet = WithCavity(BellState("-").ToDensity())
    assert Fidelity(singlet) == pytest.approx(1.0, abs=1e-12)
    assert ChshValue(singlet) == pytest.approx(TSIRELSON_BOUND, abs=1e-12)


def test_triplet_partner_is_orthogonal() -> None:
    triplet = WithCavity(BellState("+").ToDensity())
    assert Fidelity(triplet) == pytest.approx(0.0, abs=1e-12)
    assert ChshValue(triplet) == pytest.approx(-math.sqrt(2.0) * 2.0 * 1.0, abs=1e-12)


def test_ground_state_has_no_correlation() -> None:
    ground = KronStates(QubitState("gg"), FockState(0, 4)).ToDensity()
    assert Fidelity(ground) == pytest.approx(0.0)
    assert ChshValue(ground) == pytest.approx(0.0)


def test_maximally_mixed_qubits() -> None:
    mixed = WithCavity(DensityState(np.eye(4) / 4))
    assert Fidelity(mixed) == pytest.approx(0.25)
    assert ChshValue(mixed) == pytest.approx(0.0)


def test_chsh_forms_agree() -> None:
    difference = np.abs(ChshOperator().Dense() - ChshOperatorCompact().Dense()).max()
    assert difference <= 1e-15


def test_werner_state_fidelity_and_chsh_agree_with_mixing() -> None:
    p = 0.8
    werner = p * BellState("-").ToDensity().rho + (1 - p) * np.eye(4) / 4
    state = DensityState(werner, dims=(2, 2))
    assert Fidelity(state) == pytest.approx(p + (1 - p) / 4)
    assert ChshValue(state) == pytest.approx(p * TSIRELSON_BOUND)


def test_corrupted_state_raises() -> None:
    broken = DensityState(2.0 * BellState("-").ToDensity().rho, dims=(2, 2))
    with pytest.raises(InvariantViolationError) as caught:
        Fidelity(broken)
    assert caught.value.invariant == "fidelity-range"


def test_observe_reports_parity_populations() -> None:
    state = KronStates(QubitState("ee"), FockState(2, 4)).ToDensity(t=1.5)
    record = Observe(state)
    assert record.t == 1.5
    assert record.p_ee == pytest.approx(1.0)
    assert record.p_gg == pytest.approx(0.0)
    assert record.photon_number == pytest.approx(2.0)
    diagnostics = Diagnostics(state)
    assert diagnostics.p_odd == pytest.approx(0.0)


def test_chsh_respects_tsirelson_bound_for_random_states() -> None:
    for seed in range(40):
        state = DensityState(RandomDensityMatrix(4, seed=seed), dims=(2, 2))
        assert abs(ChshValue(state)) <= TSIRELSON_BOUND + 1e-9
        assert 0.0 <= Fidelity(state) <= 1.0
    rng = np.random.default_rng(1)
    for _ in range(20):
        amplitudes = rng.normal(size=4) + 1j * rng.normal(size=4)
        pure = StateVector(amplitudes / np.linalg.norm(amplitudes), (2, 2)).ToDensity()
        assert abs(ChshValue(pure)) <= TSIRELSON_BOUND + 1e-9


def test_fidelity_and_chsh_are_linear_in_rho() -> None:
    first = RandomDensityMatrix(4, seed=21)
    second = RandomDensityMatrix(4, seed=22)
    for weight in (0.0, 0.3, 0.85):
        mixed = DensityState(weight * first + (1 - weight) * second, dims=(2, 2))
        parts = [DensityState(rho, dims=(2, 2)) for rho in (first, second)]
        for observable in (Fidelity, ChshValue):
            expected = weight * observable(parts[0]) + (1 - weight) * observable(parts[1])
            assert observable(mixed) == pytest.approx(expected, abs=1e-12)


def test_population_sum_is_enforced_unless_relaxed() -> None:
    ground = KronStates(QubitState("gg"), FockState(0, 4)).ToDensity()
    inflated = ground.At(1.5 * ground.rho, 0.4)
    with pytest.raises(InvariantViolationError) as caught:
        Observe(inflated)
    assert caught.value.invariant == "populations"
    assert caught.value.snapshot is inflated
    record = Observe(inflated, enforce_invariants=False)
    assert record.PopulationSum() == pytest.approx(1.5)
    assert record.t == 0.4
