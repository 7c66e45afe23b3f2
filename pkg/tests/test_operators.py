from __future__ import annotations

import math

import numpy as np
import pytest

from bell_stabilizer.exceptions import InvariantViolationError, ModelValidationError
from bell_stabilizer.operators import (
    Annihilation,
    CoherentState,
    DensityState,
    Expectation,
    FockState,
    Identity,
    Kron,
    KronStates,
    Lift,
    Number,
    Operator,
    PartialTrace,
    Pauli,
    QubitState,
    SpaceLayout,
)


@pytest.fixture()
def SmallLayout() -> SpaceLayout:
    return SpaceLayout(ncav=4)


def test_pauli_algebra_matches_basis_convention() -> None:
    x, y, z = Pauli("x").Dense(), Pauli("y").Dense(), Pauli("z").Dense()
    assert np.allclose(x @ y, 1j * z)
    assert np.allclose(z, np.diag([-1.0, 1.0]))
    raising = Pauli("plus").Dense()
    assert raising[1, 0] == 1.0
    assert np.allclose(raising @ Pauli("minus").Dense(), np.diag([0.0, 1.0]))


def test_annihilation_matrix_elements() -> None:
    a = Annihilation(5).Dense()
    for n in range(1, 5):
        assert a[n - 1, n] == pytest.approx(math.sqrt(n))
    assert np.count_nonzero(a) == 4
    assert np.allclose(np.diag(Number(5).Dense()), np.arange(5))


def test_truncated_commutator_breaks_only_in_last_level() -> None:
    a = Annihilation(6).Dense()
    commutator = a @ a.conj().T - a.conj().T @ a
    expected = np.eye(6)
    expected[-1, -1] = 1 - 6
    assert np.allclose(commutator, expected)


def test_annihilation_rejects_tiny_truncation() -> None:
    with pytest.raises(ModelValidationError):
        Annihilation(1)


def test_kron_follows_slot_order(SmallLayout: SpaceLayout) -> None:
    lifted = Lift(Pauli("z"), "A", SmallLayout)
    expected = np.kron(np.kron(Pauli("z").Dense(), np.eye(2)), np.eye(4))
    assert np.allclose(lifted.Dense(), expected)
    assert lifted.dims == (2, 2, 4)
    assert lifted.dim == 16


def test_lift_rejects_wrong_dimension(SmallLayout: SpaceLayout) -> None:
    with pytest.raises(ModelValidationError):
        Lift(Pauli("x"), "cavity", SmallLayout)
    with pytest.raises(ModelValidationError):
        Lift(Pauli("x"), "C", SmallLayout)


def test_operator_arithmetic_checks_dimensions() -> None:
    with pytest.raises(ModelValidationError):
        Pauli("x") + Identity(3)
    combined = 2.0 * Pauli("x") - Pauli("x")
    assert np.allclose(combined.Dense(), Pauli("x").Dense())
    assert Pauli("y").IsHermitian()
    assert not Pauli("plus").IsHermitian()
    assert Pauli("z").IsDiagonal()


def test_operator_rejects_shape_mismatch() -> None:
    with pytest.raises(ModelValidationError):
        Operator.FromDense(np.eye(3), dims=(2,))


def test_coherent_state_is_normalized_and_has_mean_photon_number() -> None:
    state = CoherentState(2.0, 16)
    assert state.IsNormalized()
    photons = Expectation(Number(16), state.ToDensity())
    assert photons == pytest.approx(4.0, rel=1e-4)


def test_expectation_rejects_dimension_mismatch() -> None:
    with pytest.raises(ModelValidationError):
        Expectation(Pauli("x"), FockState(0, 3).ToDensity())


def test_expectation_of_non_hermitian_is_complex() -> None:
    plus = (QubitState("g") + QubitState("e")) * (1.0 / math.sqrt(2.0))
    value = Expectation(Pauli("minus"), plus.ToDensity())
    assert isinstance(value, complex)
    assert value == pytest.approx(0.5)


def test_expectation_flags_corrupted_state() -> None:
    rho = np.diag([0.5 + 0.2j, 0.5 - 0.2j])
    with pytest.raises(InvariantViolationError) as caught:
        Expectation(Pauli("z"), DensityState(rho))
    assert caught.value.invariant == "hermitian-expectation"


def test_partial_trace_of_product_state() -> None:
    state = KronStates(QubitState("ge"), FockState(2, 4)).ToDensity()
    qubits = PartialTrace(state, {"A", "B"})
    assert qubits.labels == ("A", "B")
    assert qubits.rho[1, 1] == pytest.approx(1.0)
    cavity = PartialTrace(state, {"cavity"})
    assert cavity.rho[2, 2] == pytest.approx(1.0)
    assert cavity.TraceDeviation() < 1e-15


def test_partial_trace_rejects_unknown_label() -> None:
    state = KronStates(QubitState("gg"), FockState(0, 2)).ToDensity()
    with pytest.raises(ModelValidationError):
        PartialTrace(state, {"D"})


def test_density_state_diagnostics() -> None:
    mixed = DensityState(np.eye(4) / 4)
    assert mixed.Purity() == pytest.approx(0.25)
    assert mixed.MinEigenvalue() == pytest.approx(0.25)
    assert mixed.HermiticityDeviation() == 0.0
    assert Kron(Pauli("x"), Pauli("x")).dims == (2, 2)


def test_kron_is_associative() -> None:
    first, second, third = Pauli("y"), Pauli("plus"), Annihilation(3)
    left = Kron(Kron(first, second), third)
    right = Kron(first, Kron(second, third))
    assert np.array_equal(left.Dense(), right.Dense())
    assert left.dims == right.dims == (2, 2, 3)


def test_lifts_on_distinct_slots_commute(SmallLayout: SpaceLayout) -> None:
    pairs = [
        (Lift(Pauli("y"), "A", SmallLayout), Lift(Pauli("plus"), "B", SmallLayout)),
        (Lift(Pauli("x"), "B", SmallLayout), Lift(Annihilation(4), "cavity", SmallLayout)),
        (Lift(Pauli("minus"), "A", SmallLayout), Lift(Number(4), "cavity", SmallLayout)),
    ]
    for first, second in pairs:
        assert np.array_equal((first @ second).Dense(), (second @ first).Dense())


def test_flipping_qubit_b_maps_singlet_to_even_parity(SmallLayout: SpaceLayout) -> None:
    singlet = (QubitState("ge") - QubitState("eg")) * (1.0 / math.sqrt(2.0))
    flipped = Lift(Pauli("x"), "B", SmallLayout).Apply(KronStates(singlet, FockState(0, 4)))
    even = (QubitState("gg") - QubitState("ee")) * (1.0 / math.sqrt(2.0))
    expected = KronStates(even, FockState(0, 4))
    assert np.allclose(flipped.amplitudes, expected.amplitudes, atol=1e-15)
