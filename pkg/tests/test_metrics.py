"""
Tests for run summary metrics.
"""

import numpy as np
import pytest

from src.core.engine import ControlMode, Trace, TraceStep
from src.core.metrics import compute_metrics, schedule_revised
from src.evaluation.evaluator import PenaltyReport
from src.optimization.mpc_builder import Schedule, WeightVector
from src.utils.exceptions import EmptyTraceError


def make_step(k, total, level, schedule, penalty=0.0, fallback=()):
    report = PenaltyReport(terms=(0.0,) * 8, normalized=(0.0,) * 8, total=penalty,
                           j7_triggered=False, j8_triggered=False, fwl_reached=False)
    return TraceStep(
        step=k, inflow=total, demand=0.0, forecast=np.full(schedule.horizon, total),
        total=total, spill=0.0, turb=total, storage_start=1.24e9, storage=1.24e9, level=level,
        genes=(3, 1, 3, 3, 20, 20, 15), sh_level=79.0,
        weights=WeightVector(0, 0, 0, 0, 0, 0, 1.0, 2.0, 20.0, 1.4e9),
        report=report, lp_status="optimal", fallback=tuple(fallback), schedule=schedule,
        hist_peak=None, last_spill=0.0,
    )


def make_trace(steps):
    return Trace("toy", ControlMode.FIXED1, 3, 0, 1.24e9, steps)


class TestScheduleRevised:
    def test_unchanged_overlap(self):
        a = Schedule(0, [150.0, 150.0, 150.0], [0.0] * 3, [150.0] * 3)
        b = Schedule(1, [150.0, 150.0, 150.0], [0.0] * 3, [150.0] * 3)
        assert not schedule_revised(a, b, 1.0)

    def test_revision_above_tolerance(self):
        a = Schedule(0, [150.0, 150.0, 150.0], [0.0] * 3, [150.0] * 3)
        b = Schedule(1, [150.0, 200.0, 150.0], [0.0] * 3, [150.0] * 3)
        assert schedule_revised(a, b, 1.0)

    def test_revision_within_tolerance(self):
        a = Schedule(0, [150.0, 150.0, 150.0], [0.0] * 3, [150.0] * 3)
        b = Schedule(1, [150.0, 150.5, 150.0], [0.0] * 3, [150.0] * 3)
        assert not schedule_revised(a, b, 1.0)

    def test_times_past_previous_schedule_ignored(self):
        a = Schedule(0, [150.0, 150.0], [0.0] * 2, [150.0] * 2)
        b = Schedule(1, [150.0, 900.0], [0.0] * 2, [150.0] * 2)
        assert not schedule_revised(a, b, 1.0)


class TestComputeMetrics:
    def test_constant_trace(self):
        steps = [make_step(k, 150.0, 76.5, Schedule.constant(k, 150.0, 0.0, 3)) for k in range(4)]
        metrics = compute_metrics(make_trace(steps))
        assert metrics.schedule_changes == 0
        assert metrics.peak_outflow == 150.0
        assert metrics.fallback_steps == 0

    def test_single_revision_counted(self):
        schedules = [
            Schedule.constant(0, 150.0, 0.0, 3),
            Schedule(1, [150.0, 200.0, 200.0], [0.0] * 3, [150.0, 200.0, 200.0]),
            Schedule(2, [200.0, 200.0, 200.0], [0.0] * 3, [200.0] * 3),
        ]
        steps = [make_step(k, s.totals[0], 76.5, s) for k, s in enumerate(schedules)]
        assert compute_metrics(make_trace(steps)).schedule_changes == 1

    def test_level_extremes(self):
        levels = [76.5, 77.0, 76.4]
        steps = [make_step(k, 150.0, h, Schedule.constant(k, 150.0, 0.0, 3)) for k, h in enumerate(levels)]
        metrics = compute_metrics(make_trace(steps))
        assert metrics.peak_rwl == 77.0
        assert metrics.lowest_rwl == 76.4

    def test_penalties_and_fallbacks(self):
        steps = [
            make_step(0, 150.0, 76.5, Schedule.constant(0, 150.0, 0.0, 3), penalty=1.5),
            make_step(1, 150.0, 76.5, Schedule.constant(1, 150.0, 0.0, 3), penalty=4.0, fallback=("held",)),
        ]
        metrics = compute_metrics(make_trace(steps))
        assert metrics.total_penalty == pytest.approx(5.5)
        assert metrics.max_penalty == 4.0
        assert metrics.fallback_steps == 1
        assert set(metrics.to_dict()) == {
            "peak_outflow", "peak_rwl", "lowest_rwl", "schedule_changes", "total_penalty",
            "max_penalty", "fallback_steps",
        }

    def test_empty_trace(self):
        with pytest.raises(EmptyTraceError):
            compute_metrics(make_trace([]))
