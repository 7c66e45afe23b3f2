"""Scripted reproductions: time series, drive sweeps, truncation study, ablations and oracles."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from .exceptions import ModelValidationError, SimulationError
from .integrator import EvolutionConfig, Evolve, LindbladGenerator, LindbladRhs, Propagate
from .models import AblationResult, OracleReport, OracleResult, SweepResult, TimeSeries, TruncationRow, TruncationStudy
from .observables import BellState, ChshOperator, ChshOperatorCompact
from .operators import (
    Annihilation,
    CoherentState,
    DensityState,
    Expectation,
    FockState,
    KronStates,
    Lift,
    Number,
    Operator,
    Pauli,
    QubitState,
    SpaceLayout,
)
from .system_model import (
    AngularFromMhz,
    BuildHamiltonian,
    BuildHamiltonianBlocks,
    CollapseChannel,
    CollapseChannels,
    DrivenHamiltonian,
    SystemParams,
)

logger = logging.getLogger(__name__)

INITIAL_STATES: Tuple[str, ...] = ("gg0", "ee0", "phi_plus_0", "phi_minus_0")

DEFAULT_NBAR_VALUES: Tuple[float, ...] = tuple(float(value) for value in range(1, 9))
DEFAULT_OMEGA_RATIOS: Tuple[float, ...] = tuple(0.25 * step for step in range(1, 9))


def InitialState(label: str, layout: SpaceLayout) -> DensityState:
    vacuum = FockState(0, layout.ncav)
    qubits = {
        "gg0": lambda: QubitState("gg"),
        "ee0": lambda: QubitState("ee"),
        "phi_plus_0": lambda: BellState("+"),
        "phi_minus_0": lambda: BellState("-"),
    }
    if label not in qubits:
        raise ModelValidationError(f"Unknown initial state '{label}', expected one of {INITIAL_STATES}.")
    return KronStates(qubits[label](), vacuum).ToDensity(labels=layout.labels)


def RunTimeSeries(
    params: SystemParams,
    initial: str = "gg0",
    evolution: EvolutionConfig | None = None,
    t_final: float | None = None,
) -> TimeSeries:
    evolution = evolution or EvolutionConfig()
    if t_final is not None:
        evolution = replace(evolution, t_final=t_final)
    state = InitialState(initial, params.Layout())
    return Evolve(state, params, evolution, label=initial)


def _RunSweepPoint(
    index: Tuple[int, int], params: SystemParams, evolution: EvolutionConfig,
) -> Tuple[Tuple[int, int], float, float, str]:
    try:
        series = RunTimeSeries(params, "gg0", evolution)
    except SimulationError as error:
        return index, math.nan, math.nan, str(error)
    return index, series.steady_state.fidelity, series.steady_state.chsh, ""


def RunSweep(
    params_base: SystemParams,
    nbar_values: Sequence[float] = DEFAULT_NBAR_VALUES,
    omega_nbar_over_kappa: Sequence[float] = DEFAULT_OMEGA_RATIOS,
    evolution: EvolutionConfig | None = None,
    workers: int = 1,
    ncav: int | None = None,
) -> SweepResult:
    """Steady state over the (nbar, Omega_nbar/kappa) grid; epsilon_c and N_cav follow each nbar."""
    if not nbar_values or not omega_nbar_over_kappa:
        raise ModelValidationError("Sweep axes must be non-empty.")
    evolution = evolution or EvolutionConfig()
    shape = (len(nbar_values), len(omega_nbar_over_kappa))
    fidelity = np.full(shape, math.nan)
    chsh = np.full(shape, math.nan)
    failures: Dict[Tuple[int, int], str] = {}
    jobs: List[Tuple[Tuple[int, int], SystemParams]] = []
    for row, nbar in enumerate(nbar_values):
        for col, ratio in enumerate(omega_nbar_over_kappa):
            try:
                point = params_base.WithDrives(nbar=nbar, omega_nbar=ratio * params_base.kappa, ncav=ncav)
            except ModelValidationError as error:
                failures[(row, col)] = str(error)
                logger.warning("Sweep point nbar=%s, Omega/kappa=%s rejected: %s", nbar, ratio, error)
                continue
            jobs.append(((row, col), point))

    def Collect(outcome: Tuple[Tuple[int, int], float, float, str]) -> None:
        index, point_fidelity, point_chsh, message = outcome
        if message:
            failures[index] = message
            logger.warning("Sweep point %s failed: %s", index, message)
            return
        fidelity[index] = point_fidelity
        chsh[index] = point_chsh

    if workers <= 1:
        for index, point in jobs:
            Collect(_RunSweepPoint(index, point, evolution))
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_RunSweepPoint, index, point, evolution) for index, point in jobs]
            for future in as_completed(futures):
                Collect(future.result())
    return SweepResult(
        nbar_values=tuple(float(value) for value in nbar_values),
        omega_nbar_over_kappa=tuple(float(value) for value in omega_nbar_over_kappa),
        fidelity=fidelity,
        chsh=chsh,
        failures=dict(sorted(failures.items())),
    )


def RunTruncationStudy(
    params: SystemParams, ncav_values: Sequence[int], evolution: EvolutionConfig | None = None,
) -> TruncationStudy:
    if any(second <= first for first, second in zip(ncav_values, ncav_values[1:])):
        raise ModelValidationError(f"Truncation values must be strictly increasing, received {list(ncav_values)}.")
    rows: List[TruncationRow] = []
    for ncav in ncav_values:
        if ncav < params.nbar + 2:
            rows.append(TruncationRow(ncav=ncav, fidelity=None, valid=False,
                                      note=f"N_cav below nbar + 2 = {params.nbar + 2:g}"))
            continue
        truncated = replace(params, ncav=ncav, strict_truncation=False)
        series = RunTimeSeries(truncated, "gg0", evolution)
        rows.append(TruncationRow(ncav=ncav, fidelity=series.steady_state.fidelity, valid=True))
        logger.info("N_cav=%d steady fidelity %.6f", ncav, series.steady_state.fidelity)
    return TruncationStudy(nbar=params.nbar, rows=rows)


def RunAblations(params: SystemParams, evolution: EvolutionConfig | None = None) -> List[AblationResult]:
    variants = {
        "full": params,
        "no_pump": replace(params, OmegaNbar=0.0),
        "no_bell_drive": replace(params, Omega0=0.0),
        "no_cavity_drive": replace(params, epsilon_c=0.0),
    }
    return [
        AblationResult(name=name, steady_state=RunTimeSeries(variant, "gg0", evolution).steady_state)
        for name, variant in variants.items()
    ]


def _Stride(interval: float, dt: float) -> int:
    return max(1, int(round(interval / dt)))


def _ZeroOperator(layout: SpaceLayout) -> Operator:
    dim = layout.Dimension()
    return Operator(sparse.csr_matrix((dim, dim), dtype=np.complex128), layout.dims)


def _T1DecayOracle(dt: float) -> OracleResult:
    layout = SpaceLayout(ncav=2)
    t1 = 1.0
    generator = LindbladGenerator(
        DrivenHamiltonian(static=_ZeroOperator(layout)),
        [CollapseChannel(1.0 / t1, Lift(Pauli("minus"), "A", layout), "relaxation A")],
    )
    initial = KronStates(QubitState("eg"), FockState(0, layout.ncav)).ToDensity()
    excited = Lift(Pauli("plus") @ Pauli("minus"), "A", layout)
    config = EvolutionConfig(dt=dt, t_final=t1, record_every=_Stride(0.1, dt))
    error = 0.0
    for state in Propagate(initial, generator, config):
        expected = math.exp(-state.t / t1)
        error = max(error, abs(Expectation(excited, state) - expected) / expected)
    return OracleResult(name="t1_decay", error=error, tolerance=1e-3, passed=error < 1e-3,
                        detail="relative error of P_e(t) against exp(-t/T1)")


def _RabiOracle(dt: float) -> OracleResult:
    layout = SpaceLayout(ncav=2)
    omega = AngularFromMhz(25.0)
    generator = LindbladGenerator(DrivenHamiltonian(static=omega * Lift(Pauli("x"), "A", layout)), [])
    initial = KronStates(QubitState("gg"), FockState(0, layout.ncav)).ToDensity()
    excited = Lift(Pauli("plus") @ Pauli("minus"), "A", layout)
    config = EvolutionConfig(dt=dt, t_final=0.02, record_every=_Stride(0.001, dt))
    error = 0.0
    for state in Propagate(initial, generator, config):
        error = max(error, abs(Expectation(excited, state) - math.sin(omega * state.t) ** 2))
    return OracleResult(name="rabi", error=error, tolerance=1e-3, passed=error < 1e-3,
                        detail="absolute error of P_e(t) against sin^2(Omega t)")


def _CavityDecayOracle(dt: float) -> OracleResult:
    layout = SpaceLayout(ncav=16)
    kappa = AngularFromMhz(2.0)
    alpha = 2.0
    generator = LindbladGenerator(
        DrivenHamiltonian(static=_ZeroOperator(layout)),
        [CollapseChannel(kappa, Lift(Annihilation(layout.ncav), "cavity", layout), "cavity decay")],
    )
    initial = KronStates(QubitState("gg"), CoherentState(alpha, layout.ncav)).ToDensity()
    photons = Lift(Number(layout.ncav), "cavity", layout)
    config = EvolutionConfig(dt=dt, t_final=0.2, record_every=_Stride(0.02, dt))
    error = 0.0
    for state in Propagate(initial, generator, config):
        expected = alpha ** 2 * math.exp(-kappa * state.t)
        error = max(error, abs(Expectation(photons, state) - expected) / expected)
    return OracleResult(name="cavity_decay", error=error, tolerance=1e-3, passed=error < 1e-3,
                        detail="relative error of <a^+a>(t) against |alpha|^2 exp(-kappa t)")


def RandomDensityMatrix(dim: int, seed: int = 7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    factor = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = factor @ factor.conj().T
    return rho / np.trace(rho)


def _TraceIdentityOracle(dt: float) -> OracleResult:
    params = SystemParams.ReferenceParameters()
    rho = RandomDensityMatrix(params.Layout().Dimension())
    rhs = LindbladRhs(BuildHamiltonian(params, 0.137), CollapseChannels(params), rho)
    error = abs(np.trace(rhs))
    return OracleResult(name="lindblad_trace_identity", error=error, tolerance=1e-10, passed=error < 1e-10,
                        detail="|tr L(rho)| for a random density matrix")


def _GeneratorAgreementOracle(dt: float) -> OracleResult:
    params = SystemParams.ReferenceParameters()
    rho = RandomDensityMatrix(params.Layout().Dimension(), seed=11)
    reference = LindbladRhs(BuildHamiltonian(params, 0.137), CollapseChannels(params), rho)
    generator = LindbladGenerator(BuildHamiltonianBlocks(params).Driven(), CollapseChannels(params))
    error = float(np.abs(generator(0.137, rho) - reference).max() / np.abs(reference).max())
    return OracleResult(name="generator_agreement", error=error, tolerance=1e-10, passed=error < 1e-10,
                        detail="relative max deviation of the sparse generator from the reference form")


def _ChshIdentityOracle(dt: float) -> OracleResult:
    error = float(np.abs(ChshOperator().Dense() - ChshOperatorCompact().Dense()).max())
    return OracleResult(name="chsh_identity", error=error, tolerance=1e-15, passed=error <= 1e-15,
                        detail="four-term CHSH operator against -sqrt(2)(XX + YY)")


def _UnitaryOracle(dt: float) -> OracleResult:
    params = replace(SystemParams.ReferenceParameters(), nbar=1.0, epsilon_c=None, ncav=None)
    generator = LindbladGenerator(BuildHamiltonianBlocks(params).Driven(), [])
    initial = KronStates(QubitState("gg"), CoherentState(1.0, params.ncav)).ToDensity()
    config = EvolutionConfig(dt=dt, t_final=0.02, record_every=_Stride(0.005, dt))
    error = max(abs(state.Purity() - 1.0) for state in Propagate(initial, generator, config))
    return OracleResult(name="unitary_purity", error=error, tolerance=1e-6, passed=error < 1e-6,
                        detail="purity drift without collapse channels")


ORACLES: Tuple[Tuple[str, Callable[[float], OracleResult]], ...] = (
    ("t1_decay", _T1DecayOracle),
    ("rabi", _RabiOracle),
    ("cavity_decay", _CavityDecayOracle),
    ("lindblad_trace_identity", _TraceIdentityOracle),
    ("generator_agreement", _GeneratorAgreementOracle),
    ("chsh_identity", _ChshIdentityOracle),
    ("unitary_purity", _UnitaryOracle),
)


def RunOracleSuite(dt: float = EvolutionConfig().dt) -> OracleReport:
    results: List[OracleResult] = []
    for name, oracle in ORACLES:
        try:
            result = oracle(dt)
        except SimulationError as error:
            result = OracleResult(name=name, error=math.inf, tolerance=0.0, passed=False, detail=str(error))
        logger.info("Oracle %s: error %.3e (tolerance %.1e) %s", result.name, result.error, result.tolerance,
                    "passed" if result.passed else "FAILED")
        results.append(result)
    return OracleReport(results=results, dt=dt)


def BestSweepPoint(result: SweepResult) -> Optional[Tuple[float, float, float]]:
    if not np.isfinite(result.fidelity).any():
        return None
    row, col = np.unravel_index(np.nanargmax(result.fidelity), result.fidelity.shape)
    return result.nbar_values[row], result.omega_nbar_over_kappa[col], float(result.fidelity[row, col])
