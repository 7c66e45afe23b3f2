from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

import yaml

from .exceptions import ConfigValidationError, ModelValidationError
from .experiments import DEFAULT_NBAR_VALUES, DEFAULT_OMEGA_RATIOS, INITIAL_STATES
from .integrator import EvolutionConfig
from .system_model import AngularFromMhz, SystemParams

MODES: Tuple[str, ...] = ("simulate", "sweep", "truncation", "oracles", "validate", "ablation")


@dataclass(frozen=True)
class SystemSettings:
    """Physical parameters in user units (MHz for frequencies, us for times)."""

    chi_A_mhz: float = 10.0
    chi_B_mhz: float = 9.5
    kappa_mhz: float = 2.0
    t1_us: float = 50.0
    t2_us: float = 50.0
    t1_A_us: Optional[float] = None
    t1_B_us: Optional[float] = None
    t2_A_us: Optional[float] = None
    t2_B_us: Optional[float] = None
    nbar: float = 4.0
    omega0_mhz: float = 1.0
    omega_nbar_mhz: float = 2.0
    epsilon_c_mhz: Optional[float] = None
    ncav: Optional[int] = None

    def ToParams(self) -> SystemParams:
        try:
            return SystemParams(
                chi_A=AngularFromMhz(self.chi_A_mhz),
                chi_B=AngularFromMhz(self.chi_B_mhz),
                kappa=AngularFromMhz(self.kappa_mhz),
                T1_A=self._Time("t1_A_us", self.t1_us),
                T1_B=self._Time("t1_B_us", self.t1_us),
                T2_A=self._Time("t2_A_us", self.t2_us),
                T2_B=self._Time("t2_B_us", self.t2_us),
                nbar=float(self.nbar),
                Omega0=AngularFromMhz(self.omega0_mhz),
                OmegaNbar=AngularFromMhz(self.omega_nbar_mhz),
                epsilon_c=None if self.epsilon_c_mhz is None else AngularFromMhz(self.epsilon_c_mhz),
                ncav=self.ncav,
            )
        except (ModelValidationError, TypeError, ValueError) as error:
            raise ConfigValidationError(f"Invalid system section: {error}") from error

    def _Time(self, name: str, shared: float) -> float:
        value = getattr(self, name)
        return float(shared if value is None else value)


@dataclass(frozen=True)
class EvolutionSettings:
    dt_ns: float = 0.2
    t_final_us: float = 20.0
    record_every: int = 500
    enforce_invariants: bool = True

    def ToConfig(self) -> EvolutionConfig:
        try:
            return EvolutionConfig(
                dt=self.dt_ns * 1e-3,
                t_final=float(self.t_final_us),
                record_every=int(self.record_every),
                enforce_invariants=bool(self.enforce_invariants),
            )
        except (ModelValidationError, TypeError, ValueError) as error:
            raise ConfigValidationError(f"Invalid evolution section: {error}") from error


@dataclass(frozen=True)
class SweepSettings:
    nbar_values: Tuple[float, ...] = DEFAULT_NBAR_VALUES
    omega_nbar_over_kappa: Tuple[float, ...] = DEFAULT_OMEGA_RATIOS
    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "nbar_values", tuple(float(value) for value in self.nbar_values))
        object.__setattr__(self, "omega_nbar_over_kappa",
                           tuple(float(value) for value in self.omega_nbar_over_kappa))
        if not self.nbar_values or not self.omega_nbar_over_kappa:
            raise ConfigValidationError("Sweep axes must be non-empty.")
        if self.workers < 1:
            raise ConfigValidationError(f"Sweep workers must be at least 1 (received {self.workers}).")


@dataclass(frozen=True)
class TruncationSettings:
    ncav_values: Tuple[int, ...] = (8, 12, 16, 20)

    def __post_init__(self) -> None:
        object.__setattr__(self, "ncav_values", tuple(int(value) for value in self.ncav_values))


@dataclass(frozen=True)
class OutputSettings:
    directory: Path = Path("output")
    emit_plots: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "directory", Path(self.directory))


@dataclass(frozen=True)
class RunConfig:
    mode: str = "simulate"
    initial: str = "gg0"
    system: SystemSettings = field(default_factory=SystemSettings)
    evolution: EvolutionSettings = field(default_factory=EvolutionSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    truncation: TruncationSettings = field(default_factory=TruncationSettings)
    output: OutputSettings = field(default_factory=OutputSettings)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigValidationError(f"Unknown mode '{self.mode}', expected one of {MODES}.")
        if self.initial not in INITIAL_STATES:
            raise ConfigValidationError(f"Unknown initial state '{self.initial}', expected one of {INITIAL_STATES}.")

    def Params(self) -> SystemParams:
        return self.system.ToParams()

    def Evolution(self) -> EvolutionConfig:
        return self.evolution.ToConfig()

    def Echo(self) -> Dict[str, Any]:
        """Flat, ordered view of every setting for summary files."""
        echo: Dict[str, Any] = {"mode": self.mode, "initial": self.initial}
        for section in SECTIONS:
            for key, value in dataclasses.asdict(getattr(self, section)).items():
                echo[f"{section}.{key}"] = value
        return echo


SECTIONS: Dict[str, type] = {
    "system": SystemSettings,
    "evolution": EvolutionSettings,
    "sweep": SweepSettings,
    "truncation": TruncationSettings,
    "output": OutputSettings,
}
SCALARS = ("mode", "initial")


def _BuildSection(name: str, data: Mapping[str, Any] | None, cls: type) -> Any:
    if not data:
        return cls()
    if not isinstance(data, Mapping):
        raise ConfigValidationError(f"Section '{name}' must be a mapping.")
    known = {item.name for item in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigValidationError(f"Unknown keys in section '{name}': {', '.join(unknown)}.")
    try:
        return cls(**{key: value for key, value in data.items()})
    except (TypeError, ValueError) as error:
        raise ConfigValidationError(f"Invalid value in section '{name}': {error}") from error


def _ReadYaml(path: Path) -> Dict[str, Any]:
    if not path.is_file():
        raise ConfigValidationError(f"Run configuration '{path}' was not found.")
    try:
        payload = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as error:
        raise ConfigValidationError(f"Run configuration '{path}' is not valid YAML: {error}") from error
    if payload is None:
        return {}
    if not isinstance(payload, dict):
        raise ConfigValidationError(
            f"Run configuration '{path}' must hold a mapping of sections, not {type(payload).__name__}.")
    return payload


def _Merge(payload: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    merged = dict(payload)
    for key, value in overrides.items():
        if isinstance(value, Mapping):
            existing = merged.get(key) or {}
            if not isinstance(existing, Mapping):
                raise ConfigValidationError(f"Section '{key}' must be a mapping.")
            section = dict(existing)
            section.update({name: item for name, item in value.items() if item is not None})
            merged[key] = section
        elif value is not None:
            merged[key] = value
    return merged


def LoadConfig(path: Path | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Resolve a RunConfig from an optional YAML file and section-wise overrides."""
    payload: Dict[str, Any] = {}
    if path is not None:
        payload = _ReadYaml(path)
    payload = _Merge(payload, overrides or {})
    unknown = sorted(set(payload) - set(SECTIONS) - set(SCALARS))
    if unknown:
        raise ConfigValidationError(f"Unknown configuration sections: {', '.join(unknown)}.")
    config = RunConfig(
        mode=str(payload.get("mode", "simulate")),
        initial=str(payload.get("initial", "gg0")),
        **{name: _BuildSection(name, payload.get(name), cls) for name, cls in SECTIONS.items()},
    )
    config.Params()
    config.Evolution()
    return config
