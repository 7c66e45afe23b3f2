from __future__ import annotations

import math

import numpy as np
import pytest

from bell_stabilizer.exceptions import ModelValidationError
from bell_stabilizer.experiments import (
    ORACLES,
    BestSweepPoint,
    InitialState,
    RunAblations,
    RunOracleSuite,
    RunSweep,
    RunTimeSeries,
    RunTruncationStudy,
)
from bell_stabilizer.integrator import EvolutionConfig
from bell_stabilizer.models import CLASSICAL_CHSH_BOUND
from bell_stabilizer.observables import Fidelity
from bell_stabilizer.system_model import SystemParams


@pytest.fixture()
def ReferenceParams() -> SystemParams:
    return SystemParams.ReferenceParameters()


@pytest.fixture()
def ShortEvolution() -> EvolutionConfig:
    return EvolutionConfig(dt=2e-4, t_final=0.002, record_every=5)


def test_initial_states(ReferenceParams: SystemParams) -> None:
    layout = ReferenceParams.Layout()
    assert Fidelity(InitialState("phi_minus_0", layout)) == pytest.approx(1.0)
    assert Fidelity(InitialState("phi_plus_0", layout)) == pytest.approx(0.0)
    assert InitialState("ee0", layout).rho[-layout.ncav, -layout.ncav] == pytest.approx(1.0)
    with pytest.raises(ModelValidationError):
        InitialState("gg1", layout)


def test_time_series_records_requested_samples(ReferenceParams: SystemParams, ShortEvolution: EvolutionConfig) -> None:
    series = RunTimeSeries(ReferenceParams, "gg0", ShortEvolution)
    assert len(series.records) == 3
    assert series.initial == "gg0"
    assert list(series.Times()) == pytest.approx([0.0, 0.001, 0.002])


def test_oracle_suite_passes_at_default_step() -> None:
    report = RunOracleSuite()
    assert [result.name for result in report.results] == [name for name, _ in ORACLES]
    assert report.AllPassed(), [result for result in report.Failed()]


def test_rabi_oracle_fails_with_coarse_step() -> None:
    report = RunOracleSuite(dt=EvolutionConfig().dt * 50)
    results = {result.name: result for result in report.results}
    assert not results["rabi"].passed
    assert not report.AllPassed()


def test_truncation_study_flags_small_cavity(ReferenceParams: SystemParams, ShortEvolution: EvolutionConfig) -> None:
    study = RunTruncationStudy(ReferenceParams, [4, 8, 16], ShortEvolution)
    assert [row.valid for row in study.rows] == [False, True, True]
    assert study.rows[0].fidelity is None
    assert "nbar + 2" in study.rows[0].note
    assert len(study.SuccessiveDifferences()) == 1


def test_truncation_values_must_increase(ReferenceParams: SystemParams) -> None:
    with pytest.raises(ModelValidationError):
        RunTruncationStudy(ReferenceParams, [16, 12])


def test_small_sweep_shape_and_summary(ReferenceParams: SystemParams, ShortEvolution: EvolutionConfig) -> None:
    result = RunSweep(ReferenceParams, nbar_values=[1.0, 2.0], omega_nbar_over_kappa=[0.5, 1.0],
                      evolution=ShortEvolution)
    assert result.fidelity.shape == (2, 2)
    assert not result.failures
    assert np.isfinite(result.fidelity).all()
    assert len(list(result.Rows())) == 4
    best = BestSweepPoint(result)
    assert best is not None and best[2] == pytest.approx(np.nanmax(result.fidelity))
    assert 0.0 <= result.FractionAbove(0.9) <= 1.0


def test_sweep_records_rejected_points(ReferenceParams: SystemParams, ShortEvolution: EvolutionConfig) -> None:
    result = RunSweep(ReferenceParams, nbar_values=[1.0], omega_nbar_over_kappa=[0.5], evolution=ShortEvolution, ncav=4)
    assert (0, 0) in result.failures
    assert math.isnan(result.fidelity[0, 0])
    assert BestSweepPoint(result) is None


def test_single_point_sweep_matches_time_series(ReferenceParams: SystemParams, ShortEvolution: EvolutionConfig) -> None:
    ratio = ReferenceParams.OmegaNbar / ReferenceParams.kappa
    result = RunSweep(ReferenceParams, nbar_values=[ReferenceParams.nbar], omega_nbar_over_kappa=[ratio],
                      evolution=ShortEvolution)
    series = RunTimeSeries(ReferenceParams, "gg0", ShortEvolution)
    assert result.fidelity[0, 0] == pytest.approx(series.steady_state.fidelity, abs=1e-9)
    assert result.chsh[0, 0] == pytest.approx(series.steady_state.chsh, abs=1e-9)


def test_sweep_rejects_empty_axes(ReferenceParams: SystemParams) -> None:
    with pytest.raises(ModelValidationError):
        RunSweep(ReferenceParams, nbar_values=[], omega_nbar_over_kappa=[1.0])


def test_ablation_variants(ReferenceParams: SystemParams, ShortEvolution: EvolutionConfig) -> None:
    results = RunAblations(ReferenceParams, ShortEvolution)
    assert [item.name for item in results] == ["full", "no_pump", "no_bell_drive", "no_cavity_drive"]


@pytest.mark.slow
def test_steady_state_reaches_target_fidelity(ReferenceParams: SystemParams) -> None:
    series = RunTimeSeries(ReferenceParams, "gg0")
    assert 0.92 <= series.steady_state.fidelity <= 0.96
    assert 2.56 <= series.steady_state.chsh <= 2.72
    late = [record.chsh for record in series.records if record.t >= 5.0]
    assert min(late) > CLASSICAL_CHSH_BOUND
    assert series.invariants.max_trace_deviation < 1e-8
    assert series.invariants.min_eigenvalue > -1e-7


@pytest.mark.slow
def test_steady_state_is_converged_in_step_size(ReferenceParams: SystemParams) -> None:
    coarse = RunTimeSeries(ReferenceParams, "gg0")
    fine = RunTimeSeries(ReferenceParams, "gg0", EvolutionConfig(dt=1e-4, record_every=1000))
    assert abs(coarse.steady_state.fidelity - fine.steady_state.fidelity) < 1e-4


@pytest.mark.slow
def test_steady_state_is_independent_of_initial_state(ReferenceParams: SystemParams) -> None:
    ground = RunTimeSeries(ReferenceParams, "gg0").steady_state.fidelity
    for initial in ("ee0", "phi_plus_0"):
        assert abs(RunTimeSeries(ReferenceParams, initial).steady_state.fidelity - ground) < 0.01


@pytest.mark.slow
def test_sweep_plateau(ReferenceParams: SystemParams) -> None:
    result = RunSweep(ReferenceParams, nbar_values=[3.0, 4.0, 5.0], omega_nbar_over_kappa=[0.5, 1.0], workers=2)
    assert not result.failures
    assert (result.fidelity > 0.92).all()


@pytest.mark.slow
def test_truncation_converges(ReferenceParams: SystemParams) -> None:
    study = RunTruncationStudy(ReferenceParams, [8, 12, 16, 20])
    differences = study.SuccessiveDifferences()
    assert len(differences) == 3
    assert differences[-1] < 0.003
    # the steady state barely populates the cavity, so every change sits at the 1e-5 noise floor
    assert max(differences) < 1e-4


@pytest.mark.slow
def test_each_drive_is_needed(ReferenceParams: SystemParams) -> None:
    results = {item.name: item.steady_state.fidelity for item in RunAblations(ReferenceParams)}
    assert results["no_pump"] < 0.6
    assert results["no_bell_drive"] < results["full"] - 0.05
