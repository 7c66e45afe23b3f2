"""Operator algebra on the qubit A x qubit B x cavity Hilbert space.

Basis conventions are fixed for the whole package: qubit A is the slowest
index and the cavity the fastest, index 0 of a qubit is |g>, index 1 is |e>,
and cavity index n is the Fock state |n>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Literal, Sequence, Tuple

import numpy as np
from scipy import sparse

from .exceptions import InvariantViolationError, ModelValidationError

PauliKind = Literal["x", "y", "z", "plus", "minus"]
Slot = Literal["A", "B", "cavity"]

QUBIT_DIMENSION = 2
HERMITIAN_TOLERANCE = 1e-12
IMAGINARY_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class Operator:
    """Immutable complex square matrix stored in CSR form."""

    matrix: sparse.csr_matrix
    dims: Tuple[int, ...]

    def __post_init__(self) -> None:
        matrix = sparse.csr_matrix(self.matrix, dtype=np.complex128)
        size = math.prod(self.dims)
        if matrix.shape != (size, size):
            raise ModelValidationError(
                f"Operator of shape {matrix.shape} does not match subsystem dimensions {self.dims}."
            )
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "dims", tuple(int(value) for value in self.dims))

    @classmethod
    def FromDense(cls, values: np.ndarray, dims: Sequence[int] | None = None) -> "Operator":
        array = np.asarray(values, dtype=np.complex128)
        if dims is None:
            dims = (array.shape[0],)
        return cls(sparse.csr_matrix(array), tuple(dims))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def Dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def Sparse(self) -> sparse.csr_matrix:
        return self.matrix

    def Coordinates(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data

    def Dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T.tocsr(), self.dims)

    def IsHermitian(self, tolerance: float = HERMITIAN_TOLERANCE) -> bool:
        difference = self.matrix - self.matrix.conj().T
        if difference.nnz == 0:
            return True
        return float(np.abs(difference.data).max()) <= tolerance

    def IsDiagonal(self) -> bool:
        rows, cols, data = self.Coordinates()
        return bool(np.all((rows == cols) | (data == 0)))

    def Apply(self, state: "StateVector") -> "StateVector":
        self._RequireDims(state.dims)
        return StateVector(self.matrix @ state.amplitudes, self.dims)

    def _RequireDims(self, dims: Tuple[int, ...]) -> None:
        if math.prod(dims) != self.dim:
            raise ModelValidationError(
                f"Dimension mismatch: operator acts on {self.dim}, state has {math.prod(dims)}."
            )

    def __matmul__(self, other: "Operator") -> "Operator":
        self._RequireDims(other.dims)
        return Operator(self.matrix @ other.matrix, self.dims)

    def __add__(self, other: "Operator") -> "Operator":
        self._RequireDims(other.dims)
        return Operator(self.matrix + other.matrix, self.dims)

    def __sub__(self, other: "Operator") -> "Operator":
        self._RequireDims(other.dims)
        return Operator(self.matrix - other.matrix, self.dims)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.matrix * scalar, self.dims)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(-self.matrix, self.dims)


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    dims: Tuple[int, ...]

    def __post_init__(self) -> None:
        amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amplitudes.size != math.prod(self.dims):
            raise ModelValidationError(
                f"State of length {amplitudes.size} does not match subsystem dimensions {self.dims}."
            )
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "dims", tuple(int(value) for value in self.dims))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def Norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def IsNormalized(self, tolerance: float = 1e-12) -> bool:
        return abs(self.Norm() ** 2 - 1.0) <= tolerance

    def Normalized(self) -> "StateVector":
        norm = self.Norm()
        if norm == 0:
            raise ModelValidationError("Cannot normalize the zero vector.")
        return StateVector(self.amplitudes / norm, self.dims)

    def Inner(self, other: "StateVector") -> complex:
        if other.dim != self.dim:
            raise ModelValidationError("Inner product between states of different dimension.")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def Projector(self) -> Operator:
        return Operator.FromDense(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)

    def ToDensity(self, t: float = 0.0, labels: Sequence[str] | None = None) -> "DensityState":
        rho = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityState(rho=rho, t=t, dims=self.dims, labels=_ResolveLabels(self.dims, labels))

    def __add__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.amplitudes + other.amplitudes, self.dims)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.amplitudes - other.amplitudes, self.dims)

    def __mul__(self, scalar: complex) -> "StateVector":
        return StateVector(self.amplitudes * scalar, self.dims)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpaceLayout:
    """Fixed A (x) B (x) cavity ordering with a truncated cavity."""

    ncav: int

    def __post_init__(self) -> None:
        if self.ncav < 2:
            raise ModelValidationError(f"Cavity truncation must be at least 2 (received {self.ncav}).")

    @property
    def labels(self) -> Tuple[str, str, str]:
        return ("A", "B", "cavity")

    @property
    def dims(self) -> Tuple[int, int, int]:
        return (QUBIT_DIMENSION, QUBIT_DIMENSION, self.ncav)

    def Dimension(self) -> int:
        return math.prod(self.dims)

    def SlotIndex(self, slot: str) -> int:
        try:
            return self.labels.index(slot)
        except ValueError as error:
            raise ModelValidationError(
                f"Unknown subsystem '{slot}', expected one of {self.labels}.") from error


@dataclass(frozen=True, eq=False)
class DensityState:
    """Density matrix at time t (in microseconds) plus its subsystem layout."""

    rho: np.ndarray
    t: float = 0.0
    dims: Tuple[int, ...] = ()
    labels: Tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        rho = np.asarray(self.rho, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ModelValidationError(f"Density matrix must be square, got shape {rho.shape}.")
        dims = tuple(self.dims) or (rho.shape[0],)
        if math.prod(dims) != rho.shape[0]:
            raise ModelValidationError(
                f"Density matrix of size {rho.shape[0]} does not match dimensions {dims}.")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", _ResolveLabels(dims, self.labels or None))

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def Trace(self) -> complex:
        return complex(np.trace(self.rho))

    def TraceDeviation(self) -> float:
        return abs(self.Trace() - 1.0)

    def HermiticityDeviation(self) -> float:
        return float(np.abs(self.rho - self.rho.conj().T).max())

    def MinEigenvalue(self) -> float:
        hermitian_part = 0.5 * (self.rho + self.rho.conj().T)
        return float(np.linalg.eigvalsh(hermitian_part)[0])

    def Purity(self) -> float:
        return float(np.real(np.vdot(self.rho.conj().T, self.rho)))

    def At(self, rho: np.ndarray, t: float) -> "DensityState":
        return DensityState(rho=rho, t=t, dims=self.dims, labels=self.labels)


def _ResolveLabels(dims: Tuple[int, ...], labels: Sequence[str] | None) -> Tuple[str, ...]:
    if labels:
        labels = tuple(labels)
        if len(labels) != len(dims):
            raise ModelValidationError(f"Labels {labels} do not match dimensions {dims}.")
        return labels
    if len(dims) == 3:
        return ("A", "B", "cavity")
    if len(dims) == 2 and dims == (QUBIT_DIMENSION, QUBIT_DIMENSION):
        return ("A", "B")
    return tuple(f"s{index}" for index in range(len(dims)))


def Identity(dim: int) -> Operator:
    return Operator(sparse.identity(dim, dtype=np.complex128, format="csr"), (dim,))


def Pauli(kind: PauliKind) -> Operator:
    raising = np.array([[0, 0], [1, 0]], dtype=np.complex128)
    lowering = raising.T.copy()
    matrices = {
        "plus": raising,
        "minus": lowering,
        "x": raising + lowering,
        "y": -1j * raising + 1j * lowering,
        "z": np.diag([-1.0, 1.0]).astype(np.complex128),
    }
    if kind not in matrices:
        raise ModelValidationError(f"Unknown Pauli operator '{kind}'.")
    return Operator.FromDense(matrices[kind])


def Annihilation(ncav: int) -> Operator:
    if ncav < 2:
        raise ModelValidationError(f"Cavity truncation must be at least 2 (received {ncav}).")
    lowering = sparse.diags(np.sqrt(np.arange(1, ncav, dtype=np.float64)), offsets=1,
                            shape=(ncav, ncav), dtype=np.complex128, format="csr")
    return Operator(lowering, (ncav,))


def Number(ncav: int) -> Operator:
    lowering = Annihilation(ncav)
    return lowering.Dagger() @ lowering


def Kron(first: Operator, second: Operator) -> Operator:
    return Operator(sparse.kron(first.matrix, second.matrix, format="csr"), first.dims + second.dims)


def KronAll(operators: Iterable[Operator]) -> Operator:
    return reduce(Kron, operators)


def Lift(op: Operator, slot: Slot, layout: SpaceLayout) -> Operator:
    index = layout.SlotIndex(slot)
    if op.dim != layout.dims[index]:
        raise ModelValidationError(
            f"Operator of dimension {op.dim} cannot act on slot '{slot}' of dimension {layout.dims[index]}."
        )
    factors = [Identity(dim) for dim in layout.dims]
    factors[index] = op
    return KronAll(factors)


def BasisState(index: int, dim: int) -> StateVector:
    if not 0 <= index < dim:
        raise ModelValidationError(f"Basis index {index} outside dimension {dim}.")
    amplitudes = np.zeros(dim, dtype=np.complex128)
    amplitudes[index] = 1.0
    return StateVector(amplitudes, (dim,))


def KronStates(*states: StateVector) -> StateVector:
    amplitudes = reduce(np.kron, [state.amplitudes for state in states])
    dims = sum((state.dims for state in states), ())
    return StateVector(amplitudes, dims)


def QubitState(label: str) -> StateVector:
    """Product state of len(label) qubits, e.g. "ge" -> |g> (x) |e>."""
    factors = []
    for char in label:
        if char not in "ge":
            raise ModelValidationError(f"Qubit label must use 'g'/'e', received '{label}'.")
        factors.append(BasisState(0 if char == "g" else 1, QUBIT_DIMENSION))
    return KronStates(*factors)


def FockState(n: int, ncav: int) -> StateVector:
    return BasisState(n, ncav)


def CoherentState(alpha: complex, ncav: int, normalize: bool = True) -> StateVector:
    amplitudes = np.zeros(ncav, dtype=np.complex128)
    amplitudes[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, ncav):
        amplitudes[n] = amplitudes[n - 1] * alpha / np.sqrt(n)
    state = StateVector(amplitudes, (ncav,))
    return state.Normalized() if normalize else state


def Expectation(op: Operator, state: DensityState) -> float | complex:
    if op.dim != state.dim:
        raise ModelValidationError(
            f"Dimension mismatch: operator acts on {op.dim}, state has {state.dim}.")
    value = complex(np.trace(op.matrix @ state.rho))
    if not op.IsHermitian():
        return value
    if abs(value.imag) >= IMAGINARY_TOLERANCE:
        raise InvariantViolationError(
            f"Hermitian observable has imaginary expectation {value.imag:.3e}; the state is corrupted.",
            invariant="hermitian-expectation",
            snapshot=state,
        )
    return value.real


def PartialTrace(state: DensityState, keep: Iterable[str]) -> DensityState:
    keep_set = set(keep)
    unknown = keep_set - set(state.labels)
    if unknown:
        raise ModelValidationError(f"Cannot keep unknown subsystems {sorted(unknown)}.")
    count = len(state.dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:count])
    cols = list(letters[count:2 * count])
    kept = [index for index, label in enumerate(state.labels) if label in keep_set]
    for index in range(count):
        if index not in kept:
            cols[index] = rows[index]
    output = "".join(rows[index] for index in kept) + "".join(cols[index] for index in kept)
    tensor = state.rho.reshape(state.dims + state.dims)
    reduced = np.einsum(f"{''.join(rows)}{''.join(cols)}->{output}", tensor)
    kept_dims = tuple(state.dims[index] for index in kept)
    size = math.prod(kept_dims) if kept_dims else 1
    return DensityState(
        rho=reduced.reshape(size, size),
        t=state.t,
        dims=kept_dims or (1,),
        labels=tuple(state.labels[index] for index in kept) or ("scalar",),
    )
