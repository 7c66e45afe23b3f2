"""Fixed-step RK4 integration of the Lindblad master equation.

The generator works in angular-rate units with hbar = 1:

    drho/dt = -i[H(t), rho] + sum_k gamma_k (L_k rho L_k^+ - 1/2 {L_k^+ L_k, rho})
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterator, List, Sequence

import numpy as np
from scipy import sparse

from .exceptions import InvariantViolationError, ModelValidationError
from .models import InvariantSummary, SteadyState, TimeSeries
from .observables import Observe
from .operators import DensityState, Operator
from .system_model import BuildHamiltonianBlocks, CollapseChannel, CollapseChannels, DrivenHamiltonian, SystemParams

logger = logging.getLogger(__name__)

TRACE_TOLERANCE = 1e-8
TRACE_ABORT = 1e-6
HERMITICITY_TOLERANCE = 1e-10
POSITIVITY_TOLERANCE = -1e-7
RK4_STABILITY_LIMIT = 2.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float = 2e-4
    t_final: float = 20.0
    record_every: int = 500
    enforce_invariants: bool = True

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ModelValidationError(f"dt must be positive (received {self.dt}).")
        if not self.t_final >= self.dt:
            raise ModelValidationError(f"t_final={self.t_final} us must be at least dt={self.dt} us.")
        if self.record_every < 1:
            raise ModelValidationError(f"record_every must be a positive step stride (received {self.record_every}).")

    def StepCount(self) -> int:
        return int(round(self.t_final / self.dt))

    def SampleCount(self) -> int:
        return self.StepCount() // self.record_every + 1


def LindbladRhs(H: Operator, channels: Sequence[CollapseChannel], rho: np.ndarray) -> np.ndarray:
    """Reference evaluation of the Lindblad generator for any square rho."""
    rho = np.asarray(rho, dtype=np.complex128)
    if H.dim != rho.shape[0]:
        raise ModelValidationError(f"Hamiltonian of dimension {H.dim} cannot act on rho of size {rho.shape[0]}.")
    hamiltonian = H.Sparse()
    result = -1j * (hamiltonian @ rho - (hamiltonian.T @ rho.T).T)
    for channel in channels:
        if channel.operator.dim != rho.shape[0]:
            raise ModelValidationError(f"Collapse operator '{channel.label}' has the wrong dimension.")
        if channel.rate == 0:
            continue
        jump = channel.operator.Sparse()
        jump_dagger = jump.conj().T.tocsr()
        decay = (jump_dagger @ jump).tocsr()
        sandwiched = jump @ (jump.conj() @ rho.T).T
        anticommutator = decay @ rho + (decay.T @ rho.T).T
        result = result + channel.rate * (sandwiched - 0.5 * anticommutator)
    return result


class LindbladGenerator:
    """Hot-path generator for Hermitian rho.

    The anti-Hermitian decay part is folded into an effective Hamiltonian,
    diagonal collapse operators are applied as an elementwise mask, and
    only sparse-times-dense products are evaluated per call.
    """

    def __init__(self, hamiltonian: DrivenHamiltonian, channels: Sequence[CollapseChannel]) -> None:
        dim = hamiltonian.static.dim
        self.dim = dim
        self.hamiltonian = hamiltonian
        self.channels = list(channels)
        decay = sparse.csr_matrix((dim, dim), dtype=np.complex128)
        self._mask = np.zeros((dim, dim), dtype=np.complex128)
        self._has_mask = False
        self._jumps: List[sparse.csr_matrix] = []
        for channel in self.channels:
            if channel.operator.dim != dim:
                raise ModelValidationError(f"Collapse operator '{channel.label}' has the wrong dimension.")
            if channel.rate == 0:
                continue
            jump = channel.operator.Sparse()
            decay = decay + channel.rate * (jump.conj().T @ jump)
            if channel.operator.IsDiagonal():
                diagonal = jump.diagonal()
                self._mask += channel.rate * np.outer(diagonal, diagonal.conj())
                self._has_mask = True
            else:
                self._jumps.append((math.sqrt(channel.rate) * jump).tocsr())
        self._effective = (hamiltonian.static.Sparse() - 0.5j * decay).tocsr()
        self._drives = [(term.operator.Sparse(), term.coefficient) for term in hamiltonian.drives]

    def SpectralRadiusBound(self) -> float:
        """Upper estimate of the generator's largest frequency from row-sum norms at t=0."""
        bound = float(abs(self._effective).sum(axis=1).max())
        for operator, coefficient in self._drives:
            bound += abs(coefficient(0.0)) * float(abs(operator).sum(axis=1).max())
        return 2.0 * bound

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        product = self._effective @ rho
        for operator, coefficient in self._drives:
            product += coefficient(t) * (operator @ rho)
        # With rho Hermitian the whole generator is W + W^+ for
        # W = -i H_eff rho + 1/2 sum_k L_k rho L_k^+, so the result is Hermitian to the last bit.
        product *= -1j
        for jump in self._jumps:
            product += 0.5 * (jump @ (jump @ rho).conj().T)
        if self._has_mask:
            product += 0.5 * (self._mask * rho)
        return product + product.conj().T


def GeneratorFromParams(params: SystemParams) -> LindbladGenerator:
    return LindbladGenerator(BuildHamiltonianBlocks(params).Driven(), CollapseChannels(params))


def _Rk4Update(rho: np.ndarray, t: float, dt: float, generator: LindbladGenerator) -> np.ndarray:
    half = 0.5 * dt
    k1 = generator(t, rho)
    k2 = generator(t + half, rho + half * k1)
    k3 = generator(t + half, rho + half * k2)
    k4 = generator(t + dt, rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def Rk4Step(state: DensityState, dt: float, generator: LindbladGenerator) -> DensityState:
    updated = _Rk4Update(state.rho, state.t, dt, generator)
    if not np.isfinite(updated).all():
        raise InvariantViolationError(
            f"Non-finite density matrix after the step from t={state.t} us.", invariant="finite", snapshot=state)
    return state.At(updated, state.t + dt)


def _CheckTrace(rho: np.ndarray, t: float, last_good: DensityState) -> np.ndarray:
    trace = np.trace(rho)
    deviation = abs(trace - 1.0)
    if deviation <= TRACE_TOLERANCE:
        return rho
    if deviation > TRACE_ABORT:
        raise InvariantViolationError(
            f"Trace deviation {deviation:.3e} at t={t} us exceeds {TRACE_ABORT:.0e}.",
            invariant="trace", snapshot=last_good)
    logger.debug("Renormalizing trace deviation %.3e at t=%.6f us.", deviation, t)
    return rho / trace.real


def _CheckSample(state: DensityState, last_good: DensityState) -> None:
    hermiticity = state.HermiticityDeviation()
    if hermiticity >= HERMITICITY_TOLERANCE:
        raise InvariantViolationError(
            f"Hermiticity deviation {hermiticity:.3e} at t={state.t} us.", invariant="hermiticity", snapshot=last_good)
    eigenvalue = state.MinEigenvalue()
    if eigenvalue <= POSITIVITY_TOLERANCE:
        raise InvariantViolationError(
            f"Minimum eigenvalue {eigenvalue:.3e} at t={state.t} us breaks positivity.",
            invariant="positivity", snapshot=last_good)


def Propagate(initial: DensityState, generator: LindbladGenerator, config: EvolutionConfig) -> Iterator[DensityState]:
    """Yield the state at t0 and after every record_every steps."""
    if initial.dim != generator.dim:
        raise ModelValidationError(f"Initial state of size {initial.dim} does not match generator size {generator.dim}.")
    if config.dt * generator.SpectralRadiusBound() > RK4_STABILITY_LIMIT:
        logger.warning("dt=%.3g us exceeds the RK4 stability estimate for this generator.", config.dt)
    if config.enforce_invariants:
        if initial.TraceDeviation() >= TRACE_TOLERANCE:
            raise ModelValidationError(f"Initial state has trace deviation {initial.TraceDeviation():.3e}.")
        _CheckSample(initial, initial)
    yield initial
    dt = config.dt
    rho = initial.rho
    last_good = initial
    for step in range(1, config.StepCount() + 1):
        t_previous = initial.t + (step - 1) * dt
        rho = _Rk4Update(rho, t_previous, dt, generator)
        if not np.isfinite(rho).all():
            raise InvariantViolationError(
                f"Non-finite density matrix after the step from t={t_previous} us.",
                invariant="finite", snapshot=last_good)
        if config.enforce_invariants:
            rho = _CheckTrace(rho, t_previous + dt, last_good)
        if step % config.record_every == 0:
            state = initial.At(rho, initial.t + step * dt)
            if config.enforce_invariants:
                _CheckSample(state, last_good)
            last_good = state
            yield state


def Evolve(
    initial: DensityState, params: SystemParams, config: EvolutionConfig, label: str = "custom",
) -> TimeSeries:
    generator = GeneratorFromParams(params)
    records = []
    invariants = InvariantSummary()
    logger.info("Evolving %d steps of dt=%.3g us on dimension %d.", config.StepCount(), config.dt, generator.dim)
    for state in Propagate(initial, generator, config):
        records.append(Observe(state, config.enforce_invariants))
        invariants = invariants.Including(state.TraceDeviation(), state.HermiticityDeviation(), state.MinEigenvalue())
    steady = SteadyState.FromRecords(records, t_final=records[-1].t)
    return TimeSeries(params=params, records=records, steady_state=steady, invariants=invariants, initial=label)
