"""Bell fidelity, CHSH correlation and parity diagnostics."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Literal

import numpy as np

from .exceptions import InvariantViolationError, ModelValidationError
from .models import TSIRELSON_BOUND, ObservableRecord, PopulationDiagnostics
from .operators import DensityState, Expectation, Kron, Operator, PartialTrace, Pauli, QubitState, StateVector

FIDELITY_TOLERANCE = 1e-9
CHSH_TOLERANCE = 1e-6
POPULATION_TOLERANCE = 1e-8


def BellState(sign: Literal["+", "-"]) -> StateVector:
    """|phi_-> = (|ge> - |eg>)/sqrt(2) and |phi_+> = (|ge> + |eg>)/sqrt(2)."""
    if sign not in ("+", "-"):
        raise ModelValidationError(f"Bell state sign must be '+' or '-', received '{sign}'.")
    factor = 1.0 if sign == "+" else -1.0
    return (QubitState("ge") + factor * QubitState("eg")) * (1.0 / math.sqrt(2.0))


@lru_cache(maxsize=1)
def ChshOperator() -> Operator:
    x, y = Pauli("x"), Pauli("y")
    total = (
        Kron(y, -y - x)
        + Kron(x, -y - x)
        + Kron(x, y - x)
        - Kron(y, y - x)
    )
    return total * (1.0 / math.sqrt(2.0))


def ChshOperatorCompact() -> Operator:
    x, y = Pauli("x"), Pauli("y")
    return (Kron(x, x) + Kron(y, y)) * (-math.sqrt(2.0))


@lru_cache(maxsize=1)
def _SingletProjector() -> Operator:
    return BellState("-").Projector()


def QubitReducedState(rho: DensityState) -> DensityState:
    if not {"A", "B"}.issubset(rho.labels):
        raise ModelValidationError(f"State with subsystems {rho.labels} has no qubit pair.")
    if rho.labels == ("A", "B"):
        return rho
    return PartialTrace(rho, {"A", "B"})


def _Fidelity(qubits: DensityState) -> float:
    value = Expectation(_SingletProjector(), qubits)
    if value < -FIDELITY_TOLERANCE or value > 1.0 + FIDELITY_TOLERANCE:
        raise InvariantViolationError(
            f"Fidelity {value!r} outside [0, 1] at t={qubits.t} us.", invariant="fidelity-range", snapshot=qubits)
    return value


def _Chsh(qubits: DensityState) -> float:
    value = Expectation(ChshOperator(), qubits)
    if abs(value) > TSIRELSON_BOUND + CHSH_TOLERANCE:
        raise InvariantViolationError(
            f"CHSH value {value!r} beyond 2*sqrt(2) at t={qubits.t} us.", invariant="tsirelson-bound", snapshot=qubits)
    return value


def Fidelity(rho: DensityState) -> float:
    """tr[(|phi_-><phi_-| (x) I_c) rho], evaluated on the reduced qubit state."""
    return _Fidelity(QubitReducedState(rho))


def ChshValue(rho: DensityState) -> float:
    return _Chsh(QubitReducedState(rho))


def _Populations(qubits: DensityState) -> tuple[float, float, float]:
    diagonal = np.real(np.diag(qubits.rho))
    return float(diagonal[0]), float(diagonal[3]), float(diagonal[1] + diagonal[2])


def _PhotonNumber(rho: DensityState) -> float:
    if "cavity" not in rho.labels:
        return 0.0
    cavity = PartialTrace(rho, {"cavity"})
    return float(np.dot(np.arange(cavity.dim), np.real(np.diag(cavity.rho))))


def Diagnostics(rho: DensityState) -> PopulationDiagnostics:
    p_gg, p_ee, p_odd = _Populations(QubitReducedState(rho))
    return PopulationDiagnostics(photon_number=_PhotonNumber(rho), p_gg=p_gg, p_ee=p_ee, p_odd=p_odd)


def Observe(rho: DensityState, enforce_invariants: bool = True) -> ObservableRecord:
    """Sample every observable; the parity populations must sum to one unless enforcement is off."""
    qubits = QubitReducedState(rho)
    p_gg, p_ee, p_odd = _Populations(qubits)
    record = ObservableRecord(
        t=rho.t,
        fidelity=_Fidelity(qubits),
        chsh=_Chsh(qubits),
        photon_number=_PhotonNumber(rho),
        p_gg=p_gg,
        p_ee=p_ee,
        p_odd=p_odd,
    )
    total = record.PopulationSum()
    if enforce_invariants and abs(total - 1.0) > POPULATION_TOLERANCE:
        raise InvariantViolationError(
            f"Parity populations sum to {total!r} at t={rho.t} us.", invariant="populations", snapshot=rho)
    return record
