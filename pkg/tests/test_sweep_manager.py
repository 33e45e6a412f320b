"""
Тесты менеджера свипов
"""
import time

import numpy as np
import pytest

import sweep_manager as sweep_module
from presets import preset_fig1a, preset_fig1b
from simulation_errors import (
    AboveThresholdError,
    InvalidArgumentError,
    ParameterPathError,
    SweepCancelledError,
)
from sweep_manager import SweepManager, sweep_values


def test_sweep_values():
    assert sweep_values(0, 90, 10) == [float(v) for v in np.linspace(0, 90, 10)]
    assert sweep_values(0, 90, 10)[-1] == 90.0
    assert sweep_values(5, 90, 1) == [5.0]
    with pytest.raises(InvalidArgumentError):
        sweep_values(0, 1, 0)


def test_theta12_sweep_reduces_delta_sq():
    manager = SweepManager(workers=2)
    values = sweep_values(0, 90, 10)
    rows = manager.run_sweep(preset_fig1b(), 'elements.theta12.phase_deg', values)
    assert [row.value for row in rows] == values
    deltas = [row.delta_sq for row in rows]
    assert all(b < a for a, b in zip(deltas, deltas[1:]))
    assert deltas[0] > 1
    assert deltas[-1] < 1
    assert manager.active_sweeps == {}


def test_pump_sweep_rows():
    manager = SweepManager(workers=3)
    rows = manager.run_sweep(preset_fig1a(), 'sources.sq1.pump_mw', sweep_values(10, 94.7, 10))
    assert all(row.delta_sq is None for row in rows)
    minima = [row.db_min for row in rows]
    assert all(b < a for a, b in zip(minima, minima[1:]))
    assert all(row.db_max > 0 for row in rows)


def test_parallel_and_serial_sweeps_agree():
    values = sweep_values(20, 160, 8)
    serial = SweepManager(workers=1).run_sweep(preset_fig1a(), 'sources.sq1.pump_mw', values)
    parallel = SweepManager(workers=4).run_sweep(preset_fig1a(), 'sources.sq1.pump_mw', values)
    assert [(r.value, r.db_min, r.db_max) for r in serial] == [(r.value, r.db_min, r.db_max) for r in parallel]


def test_empty_sweep():
    assert SweepManager().run_sweep(preset_fig1a(), 'sources.sq1.pump_mw', []) == []


def test_bad_path_fails_before_running():
    manager = SweepManager()
    with pytest.raises(ParameterPathError):
        manager.run_sweep(preset_fig1a(), 'sources.sq9.pump_mw', [1.0, 2.0])
    assert manager.active_sweeps == {}


def test_first_failure_is_raised():
    # 200 мВт выше порога
    with pytest.raises(AboveThresholdError) as excinfo:
        SweepManager(workers=2).run_sweep(preset_fig1a(), 'sources.sq1.pump_mw', [50.0, 200.0, 250.0])
    assert '200.000 mW' in str(excinfo.value)


def test_failure_stops_pending_points(monkeypatch):
    real_evaluate = sweep_module.evaluate
    calls = []

    def slow_evaluate(netlist, order=None):
        calls.append(netlist.find('sq1').params['pump_mw'])
        time.sleep(0.05)
        return real_evaluate(netlist, order)

    monkeypatch.setattr(sweep_module, 'evaluate', slow_evaluate)
    values = [250.0] + sweep_values(10, 100, 19)
    with pytest.raises(AboveThresholdError):
        SweepManager(workers=1).run_sweep(preset_fig1a(), 'sources.sq1.pump_mw', values)
    assert len(calls) < 5


def test_cancel_sweep(monkeypatch):
    manager = SweepManager(workers=1)
    real_evaluate = sweep_module.evaluate
    calls = []

    def evaluate_and_cancel(netlist, order=None):
        calls.append(netlist.find('sq1').params['pump_mw'])
        manager.cancel_sweep(7)
        return real_evaluate(netlist, order)

    monkeypatch.setattr(sweep_module, 'evaluate', evaluate_and_cancel)
    with pytest.raises(SweepCancelledError):
        manager.run_sweep(preset_fig1a(), 'sources.sq1.pump_mw', [20.0, 40.0, 60.0], sweep_id=7)
    assert calls == [20.0]
    assert not manager.is_sweep_cancelled(7)
    assert manager.cancel_sweep(7) is False


def test_manager_validation():
    with pytest.raises(InvalidArgumentError):
        SweepManager(workers=0)
