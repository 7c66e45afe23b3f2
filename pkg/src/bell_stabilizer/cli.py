from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

from .config import MODES, LoadConfig, RunConfig
from .exceptions import ConfigValidationError, SimulationError
from .experiments import RunAblations, RunOracleSuite, RunSweep, RunTimeSeries, RunTruncationStudy
from .models import SweepResult, TimeSeries
from .outputs import FormatNumber, WriteOutputs
from .system_model import RegimeChecks, ValidityRatio

logger = logging.getLogger(__name__)

FIDELITY_BAND = (0.92, 0.96)
CHSH_BAND = (2.56, 2.72)
PLATEAU_NBAR = (3.0, 4.0, 5.0)
PLATEAU_RATIOS = (0.5, 1.0)
PLATEAU_FLOOR = 0.92

# command-line flag -> key in the system section
SYSTEM_FLAGS: Dict[str, str] = {
    "chi_a_mhz": "chi_A_mhz",
    "chi_b_mhz": "chi_B_mhz",
    "kappa_mhz": "kappa_mhz",
    "t1_us": "t1_us",
    "t2_us": "t2_us",
    "t1_a_us": "t1_A_us",
    "t1_b_us": "t1_B_us",
    "t2_a_us": "t2_A_us",
    "t2_b_us": "t2_B_us",
    "nbar": "nbar",
    "omega0_mhz": "omega0_mhz",
    "omega_nbar_mhz": "omega_nbar_mhz",
    "epsilon_c_mhz": "epsilon_c_mhz",
    "ncav": "ncav",
}
SHARED_TIME_KEYS: Dict[str, Tuple[str, str]] = {
    "t1_us": ("t1_A_us", "t1_B_us"),
    "t2_us": ("t2_A_us", "t2_B_us"),
}


def ParseArgs(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description="Simulate dissipative Bell-state stabilization of two qubits in a lossy cavity.")
    parser.add_argument("mode", nargs="?", choices=MODES, default=None,
                        help="What to run; defaults to the mode in the configuration file.")
    parser.add_argument("--config", type=Path, default=None,
                        help="Optional path to a YAML configuration file.")
    parser.add_argument("--out", type=Path, default=None,
                        help="Directory where CSV, summary and plot files will be stored.")
    parser.add_argument("--dt-ns", type=float, default=None, help="Integration step in ns.")
    parser.add_argument("--t-final-us", type=float, default=None, help="Simulated duration in us.")
    parser.add_argument("--record-every", type=int, default=None, help="Record a sample every N steps.")
    parser.add_argument("--initial", default=None, help="Initial state label (gg0, ee0, phi_plus_0, phi_minus_0).")
    parser.add_argument("--workers", type=int, default=None, help="Worker processes for sweeps.")
    parser.add_argument("--emit-plots", action="store_true", default=None,
                        help="Also render SVG plots (requires the viz extra).")
    parser.add_argument("--check", action="store_true",
                        help="Exit with status 1 when the run misses its acceptance band.")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging verbosity.")

    physics = parser.add_argument_group("system parameters (MHz for frequencies, us for times)")
    for flag in SYSTEM_FLAGS:
        kind = int if flag == "ncav" else float
        physics.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=kind, default=None)
    return parser.parse_args(argv)


def BuildOverrides(args: argparse.Namespace) -> Dict[str, Any]:
    system = {key: getattr(args, flag) for flag, key in SYSTEM_FLAGS.items()}
    # a shared time flag replaces per-qubit values from the file; per-qubit flags still win
    for shared, per_qubit in SHARED_TIME_KEYS.items():
        if system[shared] is not None:
            for key in per_qubit:
                if system[key] is None:
                    system[key] = system[shared]
    return {
        "mode": args.mode,
        "initial": args.initial,
        "system": system,
        "evolution": {
            "dt_ns": args.dt_ns,
            "t_final_us": args.t_final_us,
            "record_every": args.record_every,
        },
        "sweep": {"workers": args.workers},
        "output": {"directory": args.out, "emit_plots": args.emit_plots},
    }


def _Validate(config: RunConfig, check: bool) -> int:
    params = config.Params()
    print(f"validity_ratio: {FormatNumber(ValidityRatio(params))}")
    checks = RegimeChecks(params)
    for item in checks:
        status = "ok" if item.passed else "FAIL"
        print(f"{item.name}: {FormatNumber(item.ratio)} (threshold {FormatNumber(item.threshold)}) {status}")
    if check and not all(item.passed for item in checks):
        return 1
    return 0


def _CheckTimeSeries(series: TimeSeries) -> bool:
    steady = series.steady_state
    passed = FIDELITY_BAND[0] <= steady.fidelity <= FIDELITY_BAND[1] and CHSH_BAND[0] <= steady.chsh <= CHSH_BAND[1]
    if not passed:
        logger.error("Steady state F=%.4f, B=%.4f outside F in %s, B in %s.",
                     steady.fidelity, steady.chsh, FIDELITY_BAND, CHSH_BAND)
    return passed


def _CheckSweep(result: SweepResult) -> bool:
    passed = True
    for nbar in PLATEAU_NBAR:
        for ratio in PLATEAU_RATIOS:
            if nbar not in result.nbar_values or ratio not in result.omega_nbar_over_kappa:
                continue
            value = result.Value(nbar, ratio)
            if not value > PLATEAU_FLOOR:
                logger.error("Plateau point nbar=%g, Omega/kappa=%g has fidelity %.4f.", nbar, ratio, value)
                passed = False
    return passed


def RunCommand(config: RunConfig, check: bool = False) -> int:
    if config.mode == "validate":
        return _Validate(config, check)

    status = 0
    if config.mode == "simulate":
        result: Any = RunTimeSeries(config.Params(), config.initial, config.Evolution())
        if check and not _CheckTimeSeries(result):
            status = 1
    elif config.mode == "sweep":
        result = RunSweep(
            config.Params(),
            nbar_values=config.sweep.nbar_values,
            omega_nbar_over_kappa=config.sweep.omega_nbar_over_kappa,
            evolution=config.Evolution(),
            workers=config.sweep.workers,
            ncav=config.system.ncav,
        )
        if check and not _CheckSweep(result):
            status = 1
    elif config.mode == "truncation":
        result = RunTruncationStudy(config.Params(), config.truncation.ncav_values, config.Evolution())
    elif config.mode == "ablation":
        result = RunAblations(config.Params(), config.Evolution())
    else:
        result = RunOracleSuite(dt=config.Evolution().dt)
        if not result.AllPassed():
            for failed in result.Failed():
                logger.error("Oracle %s failed: error %.3e > %.1e", failed.name, failed.error, failed.tolerance)
            status = 1

    paths: List[Path] = WriteOutputs(result, config)
    for path in paths:
        print(f"Written {path}")
    return status


def main(argv: Sequence[str] | None = None) -> int:
    args = ParseArgs(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")
    try:
        config = LoadConfig(args.config, BuildOverrides(args))
        return RunCommand(config, check=args.check)
    except ConfigValidationError as error:
        logger.error("%s", error)
        return 2
    except SimulationError as error:
        logger.error("%s", error)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
