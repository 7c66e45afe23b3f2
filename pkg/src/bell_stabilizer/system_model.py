"""Physical parameters, the driven rotating-frame Hamiltonian and its collapse channels."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, List, Tuple

import numpy as np

from .exceptions import ModelValidationError
from .models import RegimeCheck
from .operators import Annihilation, Lift, Number, Operator, Pauli, SpaceLayout

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
DISPERSIVE_WARNING_RATIO = 0.1
VALIDITY_WARNING_RATIO = 0.1
MUCH_GREATER_FACTOR = 3.0


def AngularFromMhz(value: float) -> float:
    """MHz -> rad/us."""
    return TWO_PI * value


def MhzFromAngular(value: float) -> float:
    return value / TWO_PI


def TailBound(nbar: float) -> int:
    """Smallest cavity truncation covering a coherent state of mean nbar."""
    return math.ceil(nbar + 5.0 * math.sqrt(nbar))


def DefaultCavityDimension(nbar: float) -> int:
    return max(2, TailBound(nbar) + 2)


def DispersiveShift(g: float, delta: float) -> float:
    if delta == 0:
        raise ModelValidationError("Qubit-cavity detuning must be non-zero for a dispersive shift.")
    if abs(g / delta) > DISPERSIVE_WARNING_RATIO:
        logger.warning(
            "Dispersive approximation degrading: |g/delta| = %.3f exceeds %.1f.",
            abs(g / delta), DISPERSIVE_WARNING_RATIO)
    return 2.0 * g * g / delta


def EpsilonCDefault(kappa: float, nbar: float) -> float:
    if nbar < 0:
        raise ModelValidationError(f"Mean photon number must be non-negative (received {nbar}).")
    return 0.5 * kappa * math.sqrt(nbar)


@dataclass(frozen=True)
class SystemParams:
    """Protocol parameters in rad/us (rates) and us (times).

    epsilon_c and ncav are derived from kappa and nbar when left unset.
    Infinite T1/T2 switch the corresponding qubit channel off.
    """

    chi_A: float
    chi_B: float
    kappa: float
    T1_A: float
    T1_B: float
    T2_A: float
    T2_B: float
    nbar: float
    Omega0: float
    OmegaNbar: float
    epsilon_c: float | None = None
    ncav: int | None = None
    strict_truncation: bool = True

    def __post_init__(self) -> None:
        for name in ("chi_A", "chi_B", "kappa", "nbar", "Omega0", "OmegaNbar"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ModelValidationError(f"{name} must be a finite non-negative number (received {value}).")
        for name in ("T1_A", "T1_B", "T2_A", "T2_B"):
            value = getattr(self, name)
            if math.isnan(value) or value <= 0:
                raise ModelValidationError(f"{name} must be strictly positive (received {value}).")
        for qubit in ("A", "B"):
            t1 = getattr(self, f"T1_{qubit}")
            t2 = getattr(self, f"T2_{qubit}")
            if t2 > 2.0 * t1:
                raise ModelValidationError(
                    f"T2 <= 2*T1 violated for qubit {qubit}: T2={t2} us exceeds 2*T1={2.0 * t1} us "
                    "(pure dephasing rate would be negative)."
                )
        epsilon_c = self.epsilon_c
        if epsilon_c is None:
            epsilon_c = EpsilonCDefault(self.kappa, self.nbar)
        elif not math.isfinite(epsilon_c) or epsilon_c < 0:
            raise ModelValidationError(f"epsilon_c must be a finite non-negative number (received {epsilon_c}).")
        object.__setattr__(self, "epsilon_c", float(epsilon_c))
        ncav = DefaultCavityDimension(self.nbar) if self.ncav is None else int(self.ncav)
        if ncav < 2:
            raise ModelValidationError(f"N_cav >= 2 violated (received {ncav}).")
        bound = TailBound(self.nbar)
        if ncav < bound:
            if self.strict_truncation:
                raise ModelValidationError(
                    f"N_cav >= ceil(nbar + 5 sqrt(nbar)) violated: N_cav={ncav} < {bound} for nbar={self.nbar}."
                )
            logger.warning("Cavity truncation N_cav=%d is below the coherent tail bound %d.", ncav, bound)
        object.__setattr__(self, "ncav", ncav)

    @classmethod
    def ReferenceParameters(cls) -> "SystemParams":
        kappa = AngularFromMhz(2.0)
        return cls(
            chi_A=AngularFromMhz(10.0),
            chi_B=AngularFromMhz(9.5),
            kappa=kappa,
            T1_A=50.0,
            T1_B=50.0,
            T2_A=50.0,
            T2_B=50.0,
            nbar=4.0,
            Omega0=0.5 * kappa,
            OmegaNbar=kappa,
        )

    @property
    def chi_mean(self) -> float:
        return 0.5 * (self.chi_A + self.chi_B)

    def Layout(self) -> SpaceLayout:
        return SpaceLayout(ncav=self.ncav)

    def DephasingRate(self, qubit: str) -> float:
        """1/T_phi = 1/T2 - 1/(2 T1)."""
        t1 = getattr(self, f"T1_{qubit}")
        t2 = getattr(self, f"T2_{qubit}")
        return max(0.0, 1.0 / t2 - 0.5 / t1)

    def WithDrives(self, nbar: float, omega_nbar: float, ncav: int | None = None) -> "SystemParams":
        return replace(self, nbar=nbar, OmegaNbar=omega_nbar, epsilon_c=None, ncav=ncav)

    def WithoutQubitDecoherence(self) -> "SystemParams":
        return replace(self, T1_A=math.inf, T1_B=math.inf, T2_A=math.inf, T2_B=math.inf)


def ValidityRatio(params: SystemParams) -> float:
    """|chi_A - chi_B| kappa sqrt(nbar) / (chi_A chi_B); the protocol needs this << 1."""
    denominator = params.chi_A * params.chi_B
    if denominator == 0:
        raise ModelValidationError("Validity ratio undefined: chi_A * chi_B is zero.")
    ratio = abs(params.chi_A - params.chi_B) * params.kappa * math.sqrt(params.nbar) / denominator
    if ratio > VALIDITY_WARNING_RATIO:
        logger.warning("Validity ratio %.4f exceeds %.1f; measurement-induced dephasing will compete with pumping.",
                       ratio, VALIDITY_WARNING_RATIO)
    return ratio


def _MuchGreater(name: str, larger: float, smaller: float) -> RegimeCheck:
    ratio = math.inf if smaller == 0 else larger / smaller
    return RegimeCheck(name=name, ratio=ratio, threshold=MUCH_GREATER_FACTOR,
                       passed=ratio >= MUCH_GREATER_FACTOR)


def RegimeChecks(params: SystemParams) -> List[RegimeCheck]:
    checks: List[RegimeCheck] = []
    for qubit, chi in (("A", params.chi_A), ("B", params.chi_B)):
        ratio = math.inf if params.kappa == 0 else chi / params.kappa
        checks.append(RegimeCheck(name=f"chi_{qubit} > kappa", ratio=ratio, threshold=1.0, passed=ratio > 1.0))
    for qubit in ("A", "B"):
        checks.append(_MuchGreater(f"kappa >> 1/T2_{qubit}", params.kappa, 1.0 / getattr(params, f"T2_{qubit}")))
    for qubit, chi in (("A", params.chi_A), ("B", params.chi_B)):
        checks.append(_MuchGreater(f"chi_{qubit} >> epsilon_c", chi, params.epsilon_c))
    for qubit, chi in (("A", params.chi_A), ("B", params.chi_B)):
        checks.append(_MuchGreater(f"nbar*chi_{qubit} >> Omega_nbar", params.nbar * chi, params.OmegaNbar))
    ratio = ValidityRatio(params)
    checks.append(RegimeCheck(name="validity ratio", ratio=ratio, threshold=VALIDITY_WARNING_RATIO,
                              passed=ratio <= VALIDITY_WARNING_RATIO))
    return checks


@dataclass(frozen=True, eq=False)
class DriveTerm:
    """Time-dependent contribution coefficient(t) * operator."""

    operator: Operator
    coefficient: Callable[[float], complex]


@dataclass(frozen=True, eq=False)
class DrivenHamiltonian:
    """H(t) = static + sum_k c_k(t) O_k; callers pair terms so H(t) stays Hermitian."""

    static: Operator
    drives: Tuple[DriveTerm, ...] = ()

    def Evaluate(self, t: float) -> Operator:
        total = self.static.matrix.copy()
        for term in self.drives:
            total = total + term.coefficient(t) * term.operator.matrix
        return Operator(total, self.static.dims)


@dataclass(frozen=True, eq=False)
class HamiltonianBlocks:
    """The four time-independent blocks of H(t) for one parameter set."""

    dispersive: Operator
    cavity_drive: Operator
    bell_drive: Operator
    pump: Operator
    params: SystemParams

    def CavityCoefficient(self, t: float) -> float:
        return 2.0 * self.params.epsilon_c * math.cos(self.params.chi_mean * t)

    def PumpCoefficient(self, t: float) -> complex:
        return self.params.OmegaNbar * np.exp(-1j * self.params.nbar * self.params.chi_mean * t)

    def PumpConjugateCoefficient(self, t: float) -> complex:
        return np.conj(self.PumpCoefficient(t))

    def Driven(self) -> DrivenHamiltonian:
        static = self.dispersive + self.params.Omega0 * self.bell_drive
        return DrivenHamiltonian(
            static=static,
            drives=(
                DriveTerm(self.cavity_drive, self.CavityCoefficient),
                DriveTerm(self.pump, self.PumpCoefficient),
                DriveTerm(self.pump.Dagger(), self.PumpConjugateCoefficient),
            ),
        )


@lru_cache(maxsize=64)
def BuildHamiltonianBlocks(params: SystemParams) -> HamiltonianBlocks:
    layout = params.Layout()
    sigma_z_a = Lift(Pauli("z"), "A", layout)
    sigma_z_b = Lift(Pauli("z"), "B", layout)
    photons = Lift(Number(layout.ncav), "cavity", layout)
    lowering = Lift(Annihilation(layout.ncav), "cavity", layout)
    dispersive = (0.5 * params.chi_A * sigma_z_a + 0.5 * params.chi_B * sigma_z_b) @ photons
    return HamiltonianBlocks(
        dispersive=dispersive,
        cavity_drive=lowering + lowering.Dagger(),
        bell_drive=Lift(Pauli("x"), "A", layout) + Lift(Pauli("x"), "B", layout),
        pump=Lift(Pauli("plus"), "A", layout) - Lift(Pauli("plus"), "B", layout),
        params=params,
    )


def BuildHamiltonian(params: SystemParams, t: float) -> Operator:
    if t < 0:
        raise ModelValidationError(f"Hamiltonian time must be non-negative (received {t}).")
    return BuildHamiltonianBlocks(params).Driven().Evaluate(t)


@dataclass(frozen=True, eq=False)
class CollapseChannel:
    rate: float
    operator: Operator
    label: str = ""

    def __post_init__(self) -> None:
        if not self.rate >= 0:
            raise ModelValidationError(f"Collapse rate must be non-negative (received {self.rate}).")


def CollapseChannels(params: SystemParams) -> List[CollapseChannel]:
    layout = params.Layout()
    channels = [CollapseChannel(params.kappa, Lift(Annihilation(layout.ncav), "cavity", layout), "cavity decay")]
    for qubit in ("A", "B"):
        channels.append(CollapseChannel(
            1.0 / getattr(params, f"T1_{qubit}"),
            Lift(Pauli("minus"), qubit, layout),
            f"relaxation {qubit}",
        ))
    for qubit in ("A", "B"):
        channels.append(CollapseChannel(
            0.5 * params.DephasingRate(qubit),
            Lift(Pauli("z"), qubit, layout),
            f"dephasing {qubit}",
        ))
    return channels
