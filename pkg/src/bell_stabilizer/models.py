from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ModelValidationError

if TYPE_CHECKING:
    from .system_model import SystemParams

TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
CLASSICAL_CHSH_BOUND = 2.0
STEADY_WINDOW_FRACTION = 0.25


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    ratio: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class PopulationDiagnostics:
    photon_number: float
    p_gg: float
    p_ee: float
    p_odd: float


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    fidelity: float
    chsh: float
    photon_number: float
    p_gg: float
    p_ee: float
    p_odd: float

    def __post_init__(self) -> None:
        if abs(self.chsh) > TSIRELSON_BOUND + 1e-6:
            raise ModelValidationError(f"CHSH value {self.chsh!r} exceeds the Tsirelson bound at t={self.t} us.")

    def PopulationSum(self) -> float:
        return self.p_gg + self.p_ee + self.p_odd

    def AsRow(self) -> Tuple[float, ...]:
        return (self.t, self.fidelity, self.chsh, self.photon_number, self.p_gg, self.p_ee, self.p_odd)


@dataclass(frozen=True)
class SteadyState:
    fidelity: float
    fidelity_spread: float
    chsh: float
    chsh_spread: float
    window_start: float
    window_end: float

    @classmethod
    def FromRecords(
        cls, records: Sequence[ObservableRecord], t_final: float,
        fraction: float = STEADY_WINDOW_FRACTION,
    ) -> "SteadyState":
        window_start = t_final * (1.0 - fraction)
        window = [record for record in records if record.t >= window_start - 1e-12]
        if not window:
            raise ModelValidationError(
                f"No samples inside the steady-state window [{window_start}, {t_final}] us.")
        fidelity = np.array([record.fidelity for record in window])
        chsh = np.array([record.chsh for record in window])
        return cls(
            fidelity=float(fidelity.mean()),
            fidelity_spread=float(fidelity.std()),
            chsh=float(chsh.mean()),
            chsh_spread=float(chsh.std()),
            window_start=window_start,
            window_end=t_final,
        )


@dataclass(frozen=True)
class InvariantSummary:
    max_trace_deviation: float = 0.0
    max_hermiticity_deviation: float = 0.0
    min_eigenvalue: float = math.inf

    def Including(self, trace_deviation: float, hermiticity_deviation: float,
                  min_eigenvalue: float) -> "InvariantSummary":
        return InvariantSummary(
            max_trace_deviation=max(self.max_trace_deviation, trace_deviation),
            max_hermiticity_deviation=max(self.max_hermiticity_deviation, hermiticity_deviation),
            min_eigenvalue=min(self.min_eigenvalue, min_eigenvalue),
        )


@dataclass(frozen=True)
class TimeSeries:
    params: Optional["SystemParams"]
    records: Sequence[ObservableRecord]
    steady_state: SteadyState
    invariants: InvariantSummary = field(default_factory=InvariantSummary)
    initial: str = "custom"

    def __post_init__(self) -> None:
        times = [record.t for record in self.records]
        if any(later <= earlier for earlier, later in zip(times, times[1:])):
            raise ModelValidationError("Time series records must be strictly increasing in t.")
        if self.steady_state.window_start < 0 or (times and self.steady_state.window_end > times[-1] + 1e-9):
            raise ModelValidationError("Steady-state window must lie inside the simulated interval.")

    @property
    def t_final(self) -> float:
        return self.records[-1].t

    def Times(self) -> np.ndarray:
        return np.array([record.t for record in self.records])

    def Column(self, name: str) -> np.ndarray:
        return np.array([getattr(record, name) for record in self.records])


@dataclass(frozen=True, eq=False)
class SweepResult:
    nbar_values: Tuple[float, ...]
    omega_nbar_over_kappa: Tuple[float, ...]
    fidelity: np.ndarray
    chsh: np.ndarray
    failures: Dict[Tuple[int, int], str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        shape = (len(self.nbar_values), len(self.omega_nbar_over_kappa))
        if self.fidelity.shape != shape or self.chsh.shape != shape:
            raise ModelValidationError(
                f"Sweep matrices {self.fidelity.shape}/{self.chsh.shape} do not match axes {shape}.")

    def Rows(self) -> Iterator[Tuple[float, float, float, float]]:
        for row, nbar in enumerate(self.nbar_values):
            for col, ratio in enumerate(self.omega_nbar_over_kappa):
                yield nbar, ratio, float(self.fidelity[row, col]), float(self.chsh[row, col])

    def FractionAbove(self, threshold: float, quantity: str = "fidelity") -> float:
        values = self.fidelity if quantity == "fidelity" else self.chsh
        finite = values[np.isfinite(values)]
        if finite.size == 0:
            return 0.0
        return float(np.count_nonzero(finite > threshold) / finite.size)

    def Value(self, nbar: float, ratio: float, quantity: str = "fidelity") -> float:
        row = _AxisIndex(self.nbar_values, nbar)
        col = _AxisIndex(self.omega_nbar_over_kappa, ratio)
        values = self.fidelity if quantity == "fidelity" else self.chsh
        return float(values[row, col])


def _AxisIndex(axis: Sequence[float], value: float) -> int:
    for index, item in enumerate(axis):
        if math.isclose(item, value, rel_tol=1e-9, abs_tol=1e-12):
            return index
    raise ModelValidationError(f"Value {value} is not on the sweep axis {tuple(axis)}.")


@dataclass(frozen=True)
class TruncationRow:
    ncav: int
    fidelity: Optional[float]
    valid: bool
    note: str = ""


@dataclass(frozen=True)
class TruncationStudy:
    nbar: float
    rows: Sequence[TruncationRow]

    def SuccessiveDifferences(self) -> List[float]:
        values = [row.fidelity for row in self.rows if row.valid and row.fidelity is not None]
        return [abs(second - first) for first, second in zip(values, values[1:])]


@dataclass(frozen=True)
class AblationResult:
    name: str
    steady_state: SteadyState


@dataclass(frozen=True)
class OracleResult:
    name: str
    error: float
    tolerance: float
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class OracleReport:
    results: Sequence[OracleResult]
    dt: float

    def AllPassed(self) -> bool:
        return all(result.passed for result in self.results)

    def Failed(self) -> List[OracleResult]:
        return [result for result in self.results if not result.passed]
