from __future__ import annotations

import csv
import io
import math
import os
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, List, Mapping, Sequence, Tuple

from .config import RunConfig
from .exceptions import SimulationError
from .experiments import BestSweepPoint
from .models import AblationResult, OracleReport, SweepResult, TimeSeries, TruncationStudy

TIME_SERIES_HEADER = ("t_us", "fidelity", "chsh", "photon_number", "p_gg", "p_ee", "p_odd")
SWEEP_HEADER = ("nbar", "omega_nbar_over_kappa", "fidelity", "chsh")
TRUNCATION_HEADER = ("ncav", "steady_fidelity", "valid", "note")
ABLATION_HEADER = ("variant", "steady_fidelity", "steady_fidelity_spread", "steady_chsh", "steady_chsh_spread")


def FormatNumber(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(FormatNumber(item) for item in value) + "]"
    return str(value)


def _CsvText(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([FormatNumber(item) for item in row])
    return buffer.getvalue()


def _SummaryText(values: Mapping[str, Any], config: RunConfig) -> str:
    lines = [f"{key}: {FormatNumber(value)}" for key, value in values.items()]
    lines.extend(f"config.{key}: {FormatNumber(value)}" for key, value in config.Echo().items())
    return "\n".join(lines) + "\n"


class _OutputBatch:
    """Writes files through temporary siblings and removes everything on failure."""

    def __init__(self, directory: Path) -> None:
        self.directory = directory
        self.written: List[Path] = []

    def Text(self, name: str, text: str) -> Path:
        target = self.directory / name
        temporary = target.with_name(target.name + ".tmp")
        try:
            temporary.write_text(text, encoding="utf-8")
            os.replace(temporary, target)
        finally:
            if temporary.exists():
                temporary.unlink()
        self.written.append(target)
        return target

    def Register(self, path: Path) -> Path:
        self.written.append(path)
        return path

    def Discard(self) -> None:
        for path in self.written:
            if path.exists():
                path.unlink()
        self.written.clear()


def _TimeSeriesFiles(batch: _OutputBatch, stem: str, series: TimeSeries, config: RunConfig) -> None:
    batch.Text(f"{stem}.csv", _CsvText(TIME_SERIES_HEADER, (record.AsRow() for record in series.records)))
    steady = series.steady_state
    summary = {
        "steady_fidelity": steady.fidelity,
        "steady_fidelity_spread": steady.fidelity_spread,
        "steady_chsh": steady.chsh,
        "steady_chsh_spread": steady.chsh_spread,
        "steady_window_start_us": steady.window_start,
        "steady_window_end_us": steady.window_end,
        "samples": len(series.records),
        "max_trace_deviation": series.invariants.max_trace_deviation,
        "max_hermiticity_deviation": series.invariants.max_hermiticity_deviation,
        "min_eigenvalue": series.invariants.min_eigenvalue,
    }
    batch.Text(f"{stem}_summary.txt", _SummaryText(summary, config))
    if config.output.emit_plots:
        from .visualization import RenderTimeSeries

        path = batch.Register(batch.directory / f"{stem}.svg")
        RenderTimeSeries(series, path)


def _SweepFiles(batch: _OutputBatch, stem: str, result: SweepResult, config: RunConfig) -> None:
    batch.Text(f"{stem}.csv", _CsvText(SWEEP_HEADER, result.Rows()))
    best = BestSweepPoint(result)
    summary = {
        "points": len(result.nbar_values) * len(result.omega_nbar_over_kappa),
        "failed_points": len(result.failures),
        "fraction_fidelity_above_0.90": result.FractionAbove(0.9),
        "fraction_chsh_above_2": result.FractionAbove(2.0, quantity="chsh"),
        "best_nbar": best[0] if best else None,
        "best_omega_nbar_over_kappa": best[1] if best else None,
        "best_fidelity": best[2] if best else None,
    }
    for (row, col), message in result.failures.items():
        summary[f"failure.{row}.{col}"] = message
    batch.Text(f"{stem}_summary.txt", _SummaryText(summary, config))
    if config.output.emit_plots:
        from .visualization import RenderSweep

        path = batch.Register(batch.directory / f"{stem}.svg")
        RenderSweep(result, path)


def _TruncationFiles(batch: _OutputBatch, stem: str, study: TruncationStudy, config: RunConfig) -> None:
    rows = [(row.ncav, row.fidelity, row.valid, row.note) for row in study.rows]
    batch.Text(f"{stem}.csv", _CsvText(TRUNCATION_HEADER, rows))
    differences = study.SuccessiveDifferences()
    summary = {"nbar": study.nbar, "successive_differences": differences}
    batch.Text(f"{stem}_summary.txt", _SummaryText(summary, config))


def _OracleFiles(batch: _OutputBatch, stem: str, report: OracleReport, config: RunConfig) -> None:
    lines = [f"dt_us: {FormatNumber(report.dt)}", f"all_passed: {FormatNumber(report.AllPassed())}"]
    for result in report.results:
        status = "PASS" if result.passed else "FAIL"
        lines.append(
            f"{result.name}: {status} error={FormatNumber(result.error)} "
            f"tolerance={FormatNumber(result.tolerance)} ({result.detail})"
        )
    batch.Text(f"{stem}_report.txt", "\n".join(lines) + "\n")


def _AblationFiles(batch: _OutputBatch, stem: str, results: Sequence[AblationResult], config: RunConfig) -> None:
    rows = [
        (item.name, item.steady_state.fidelity, item.steady_state.fidelity_spread,
         item.steady_state.chsh, item.steady_state.chsh_spread)
        for item in results
    ]
    batch.Text(f"{stem}.csv", _CsvText(ABLATION_HEADER, rows))
    summary = {f"steady_fidelity.{item.name}": item.steady_state.fidelity for item in results}
    batch.Text(f"{stem}_summary.txt", _SummaryText(summary, config))


def WriteOutputs(result: Any, config: RunConfig, timestamp: str | None = None) -> List[Path]:
    directory = config.output.directory
    directory.mkdir(parents=True, exist_ok=True)
    if timestamp is None:
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    stem = f"{config.mode}_{timestamp}"
    batch = _OutputBatch(directory)
    try:
        if isinstance(result, TimeSeries):
            _TimeSeriesFiles(batch, stem, result, config)
        elif isinstance(result, SweepResult):
            _SweepFiles(batch, stem, result, config)
        elif isinstance(result, TruncationStudy):
            _TruncationFiles(batch, stem, result, config)
        elif isinstance(result, OracleReport):
            _OracleFiles(batch, stem, result, config)
        elif isinstance(result, (list, tuple)) and all(isinstance(item, AblationResult) for item in result):
            _AblationFiles(batch, stem, result, config)
        else:
            raise SimulationError(f"No output format for result of type {type(result).__name__}.")
    except Exception:
        batch.Discard()
        raise
    return list(batch.written)


def ReadTimeSeriesCsv(path: Path) -> List[Tuple[float, ...]]:
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if tuple(header) != TIME_SERIES_HEADER:
            raise SimulationError(f"Unexpected time-series header {header}.")
        return [tuple(float(value) if value else math.nan for value in row) for row in reader]
