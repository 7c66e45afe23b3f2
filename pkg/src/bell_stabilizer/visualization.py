from __future__ import annotations

from pathlib import Path

import numpy as np

from .exceptions import SimulationError
from .models import CLASSICAL_CHSH_BOUND, TSIRELSON_BOUND, SweepResult, TimeSeries

CONTOUR_LEVELS = (0.75, 0.9)


def _Pyplot():
    try:
        import matplotlib.pyplot as plt
    except ImportError as error:
        raise SimulationError("SVG rendering needs matplotlib; install the viz extra (pip install -e .[viz]).") from error
    return plt


def RenderTimeSeries(series: TimeSeries, output_path: Path) -> None:
    plt = _Pyplot()
    if not series.records:
        raise SimulationError("Cannot render an empty time series.")

    times = series.Times()
    fig, fidelity_axis = plt.subplots(figsize=(8, 5))
    fidelity_axis.plot(times, series.Column("fidelity"), color="#1f4e79", linewidth=1.5, label="Fidelity")
    fidelity_axis.set_xlabel("t (us)")
    fidelity_axis.set_ylabel("Fidelity to |phi_->")
    fidelity_axis.set_ylim(0.0, 1.0)
    fidelity_axis.set_title("Bell state stabilization")

    chsh_axis = fidelity_axis.twinx()
    chsh_axis.plot(times, series.Column("chsh"), color="#c0504d", linewidth=1.0, alpha=0.8, label="CHSH")
    chsh_axis.axhline(y=CLASSICAL_CHSH_BOUND, color="green", linestyle="-.", linewidth=1, label="CHSH = 2")
    chsh_axis.axhline(y=TSIRELSON_BOUND, color="#555555", linestyle="--", linewidth=1, label="2 sqrt(2)")
    chsh_axis.set_ylabel("CHSH correlation")
    chsh_axis.set_ylim(-TSIRELSON_BOUND, TSIRELSON_BOUND * 1.05)

    handles, labels = fidelity_axis.get_legend_handles_labels()
    more_handles, more_labels = chsh_axis.get_legend_handles_labels()
    fidelity_axis.legend(handles + more_handles, labels + more_labels, loc="lower right")

    output_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output_path, format="svg", bbox_inches="tight")
    plt.close(fig)


def RenderSweep(result: SweepResult, output_path: Path) -> None:
    plt = _Pyplot()

    fig, ax = plt.subplots(figsize=(7, 5))
    ratios = np.asarray(result.omega_nbar_over_kappa)
    nbars = np.asarray(result.nbar_values)
    mesh = ax.pcolormesh(ratios, nbars, result.fidelity, shading="nearest", cmap="viridis", vmin=0.0, vmax=1.0)
    fig.colorbar(mesh, ax=ax, label="Steady-state fidelity")
    finite = result.fidelity[np.isfinite(result.fidelity)]
    levels = [level for level in CONTOUR_LEVELS if finite.size and finite.min() < level < finite.max()]
    if len(ratios) > 1 and len(nbars) > 1 and levels:
        contours = ax.contour(ratios, nbars, np.nan_to_num(result.fidelity), levels=levels,
                              colors="black", linewidths=1)
        ax.clabel(contours, fmt="%.2f")
    ax.set_xlabel("Omega_nbar / kappa")
    ax.set_ylabel("nbar")
    ax.set_title("Steady-state fidelity")

    output_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output_path, format="svg", bbox_inches="tight")
    plt.close(fig)
