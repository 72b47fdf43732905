"""
Tests for the MPC subproblem builder and schedule extraction.
"""

import numpy as np
import pytest

from src.config.settings import LP_STORAGE_SCALE
from src.evaluation.evaluator import EvaluatorConfig
from src.hydro.curve import storage_from_level
from src.hydro.reservoir import ReservoirState
from src.optimization.linprog import LPSolution, LPStatus, solve
from src.optimization.mpc_builder import (
    Schedule, TargetLevels, VarMap, WeightVector, build, extract_schedule, extract_storages, time_weights,
)
from src.optimization.weight_search import Chromosome, SHTable, decode
from src.utils.exceptions import (
    InconsistentLengthsError, NotOptimalError, StateOutOfRangeError, ValidationError,
)


@pytest.fixture
def targets(spec):
    return EvaluatorConfig.from_levels(spec)


@pytest.fixture
def weights(spec):
    return decode(Chromosome((3, 1, 3, 3, 10, 10, 15, 1)), spec, SHTable.from_levels(spec), 6)


def state_at(spec, level, total=150.0, spill=0.0, k=0):
    return ReservoirState(storage_from_level(spec.curve, level), total, spill, spill, step_index=k)


def solve_step(spec, state, forecast, z, targets, prev=None, **kwargs):
    prev = prev or Schedule.constant(state.step_index - 1, state.committed_total_outflow,
                                     state.committed_spill_outflow, len(forecast))
    lp, vm = build(spec, state, forecast, prev, z, targets.s_u, targets.s_l, **kwargs)
    return lp, vm, solve(lp)


def lp_objective(spec, z, vm, forecast, state, prev, totals, spills, s_u, s_l):
    """Objective of a flow schedule with every slack at its smallest feasible value."""
    H = len(totals)
    w_in, w_between = time_weights(H)
    prev_totals = prev.aligned_totals(state.step_index, H)
    storages = state.storage + np.cumsum((np.asarray(forecast) - totals) * spec.dt)
    value = z.w1 * max(spills) + z.w2 * sum(spills)
    value += sum(z.w3_i * w_in[t - 1] * max(w_in[t - 1] * (totals[t - 1] - totals[t]), 0.0)
                 + z.w3_d * w_in[t - 1] * max(w_in[t - 1] * (totals[t] - totals[t - 1]), 0.0)
                 for t in range(1, H))
    value += sum(z.w4_i * w_between[t] * max(w_between[t] * (prev_totals[t] - totals[t]), 0.0)
                 + z.w4_d * w_between[t] * max(w_between[t] * (totals[t] - prev_totals[t]), 0.0)
                 for t in range(H))
    value += sum(z.w5_1 * max(s - s_u, 0.0) + z.w5_2 * max(s_l - s, 0.0) + z.w5_3 * max(s - z.s_h, 0.0)
                 for s in storages)
    return value, storages


class TestTimeWeights:
    def test_in_horizon_weight(self):
        w_in, _ = time_weights(6)
        assert w_in[0] == pytest.approx(1.0 / 6.0)

    def test_between_weights(self):
        _, w_between = time_weights(6)
        assert w_between[0] == 1.0
        assert w_between[3] == pytest.approx(0.25)
        assert w_between[4] == pytest.approx(0.1)

    def test_horizon_one(self):
        w_in, w_between = time_weights(1)
        assert w_in.size == 0
        assert list(w_between) == [1.0]


class TestSchedule:
    def test_aligned_totals_pad_with_last_entry(self):
        prev = Schedule(4, [100.0, 200.0, 300.0], [0.0, 0.0, 36.0], [100.0, 200.0, 264.0])
        np.testing.assert_array_equal(prev.aligned_totals(5, 4), [200.0, 300.0, 300.0, 300.0])

    def test_aligned_totals_cannot_look_back(self):
        prev = Schedule.constant(4, 150.0, 0.0, 3)
        with pytest.raises(InconsistentLengthsError):
            prev.aligned_totals(3, 2)

    def test_unequal_series_rejected(self):
        with pytest.raises(InconsistentLengthsError):
            Schedule(0, [1.0, 2.0], [0.0], [1.0, 2.0])

    def test_target_ordering(self, spec):
        with pytest.raises(ValidationError):
            TargetLevels.from_levels(spec, 76.0, 76.5, 79.0)
        targets = TargetLevels.from_levels(spec, 76.5, 76.0, 79.0)
        assert targets.s_l < targets.s_u < targets.s_h

    def test_negative_weight_rejected(self):
        with pytest.raises(ValidationError):
            WeightVector(-1.0, 0, 0, 0, 0, 0, 1.0, 2.0, 20.0, 1e9)


class TestBuild:
    """LP shape and the meaning of its optimum."""

    def test_variable_count(self, spec, weights, targets):
        lp, vm = build(spec, state_at(spec, 70.0), np.zeros(6), Schedule.constant(-1, 150.0, 0.0, 6),
                       weights, targets.s_u, targets.s_l)
        assert vm.n == lp.n == 11 * 6 - 1
        assert not vm.softened

    def test_softened_variable_count(self, spec, weights, targets):
        lp, vm = build(spec, state_at(spec, 70.0), np.zeros(6), Schedule.constant(-1, 150.0, 0.0, 6),
                       weights, targets.s_u, targets.s_l, softened=True)
        assert vm.n == lp.n == 13 * 6 - 1
        assert vm.softened

    def test_layout_is_contiguous(self):
        vm = VarMap.layout(4)
        families = [vm.totals, vm.spills, vm.turbs, vm.storages, vm.din_i, vm.din_d,
                    vm.dbw_i, vm.dbw_d, vm.mu1, vm.mu2, vm.mu3]
        columns = [j for family in families for j in family] + [vm.peak]
        assert columns == list(range(vm.n))

    def test_zero_forecast_keeps_committed_outflow(self, spec, weights, targets):
        state = state_at(spec, 70.0)
        _, vm, sol = solve_step(spec, state, np.zeros(6), weights, targets)
        assert sol.optimal
        schedule = extract_schedule(sol, vm, 0)
        assert schedule.totals[0] == 150.0
        np.testing.assert_array_equal(schedule.spills, np.zeros(6))
        np.testing.assert_allclose(schedule.totals - schedule.spills - schedule.turbs, 0.0, atol=1e-6)

    def test_demand_is_a_floor(self, spec, weights, targets):
        state = state_at(spec, 70.0)
        demand = np.array([0.0, 180.0, 180.0, 180.0, 180.0, 180.0])
        _, vm, sol = solve_step(spec, state, np.zeros(6), weights, targets, demand=demand)
        schedule = extract_schedule(sol, vm, 0)
        assert np.all(schedule.totals[1:] >= 180.0 - 1e-9)

    def test_planned_storages_follow_mass_balance(self, spec, weights, targets):
        state = state_at(spec, 77.0, total=400.0, spill=136.0)
        forecast = np.array([2500.0, 2700.0, 2900.0, 3100.0, 3000.0, 2800.0])
        _, vm, sol = solve_step(spec, state, forecast, weights, targets)
        schedule = extract_schedule(sol, vm, 0)
        expected = state.storage + np.cumsum((forecast - schedule.totals) * spec.dt)
        np.testing.assert_allclose(extract_storages(sol, vm), expected, rtol=1e-9)

    def test_optimum_not_beaten_by_sampled_schedules(self, spec, weights, targets):
        state = state_at(spec, 77.5, total=600.0, spill=336.0)
        forecast = np.array([2200.0, 2600.0, 3000.0, 3300.0])
        prev = Schedule.constant(-1, 600.0, 336.0, 4)
        lp, vm, sol = solve_step(spec, state, forecast, weights, targets, prev=prev)
        assert sol.optimal
        best, _ = lp_objective(spec, weights, vm, forecast, state, prev,
                               *_flows(sol, vm), targets.s_u, targets.s_l)
        assert best == pytest.approx(sol.objective_value, rel=1e-7, abs=1e-9)

        rng = np.random.default_rng(2024)
        checked = 0
        for _ in range(300):
            totals = np.concatenate([[600.0], rng.uniform(264.0, 4000.0, 3)])
            spills = totals - spec.mo_turb
            spills[0] = 336.0
            value, storages = lp_objective(spec, weights, vm, forecast, state, prev, totals, spills,
                                           targets.s_u, targets.s_l)
            if storages.min() < spec.lws or storages.max() > spec.fws:
                continue
            checked += 1
            assert value >= sol.objective_value - 1e-7 * (1.0 + abs(value))
        assert checked > 0

    def test_w1_never_raises_peak_spill(self, spec, targets):
        state = state_at(spec, 78.8, total=1000.0, spill=736.0)
        forecast = np.array([3000.0, 3600.0, 4200.0, 3900.0])
        sh = storage_from_level(spec.curve, 79.0)
        peaks = []
        for w1 in (1e-4, 1e-3, 1e-2, 1e-1):
            z = WeightVector(w1, 1e-4, 1e-3, 1e-3, 1e-3, 1e-3, 1e-8, 2e-8, 2e-7, sh)
            _, vm, sol = solve_step(spec, state, forecast, z, targets)
            peaks.append(float(np.max(extract_schedule(sol, vm, 0).spills)))
        assert all(b <= a + 1e-6 for a, b in zip(peaks, peaks[1:]))

    def test_state_outside_curve(self, spec, weights, targets):
        state = ReservoirState(1.6e9, 150.0, 0.0, 0.0)
        prev = Schedule.constant(-1, 150.0, 0.0, 3)
        with pytest.raises(StateOutOfRangeError):
            build(spec, state, np.zeros(3), prev, weights, targets.s_u, targets.s_l)
        lp, vm = build(spec, state, np.zeros(3), prev, weights, targets.s_u, targets.s_l, softened=True)
        assert solve(lp).optimal

    def test_soft_penalty_is_charged_per_lp_storage_unit(self, spec, weights, targets):
        state = ReservoirState(1.6e9, 150.0, 0.0, 0.0)
        prev = Schedule.constant(-1, 150.0, 0.0, 3)
        lp, vm = build(spec, state, np.zeros(3), prev, weights, targets.s_u, targets.s_l,
                       softened=True, soft_penalty=1e6)
        np.testing.assert_array_equal(lp.objective[list(vm.soft_hi)], 1e6)
        sol = solve(lp)
        # the committed first step cannot drain the excess, so its slack is the overshoot in hm3
        overshoot = (1.6e9 - 150.0 * spec.dt - spec.fws) / LP_STORAGE_SCALE
        assert sol.values[vm.soft_hi[0]] == pytest.approx(overshoot, rel=1e-9)

    def test_demand_length_must_match(self, spec, weights, targets):
        with pytest.raises(InconsistentLengthsError):
            build(spec, state_at(spec, 70.0), np.zeros(3), Schedule.constant(-1, 150.0, 0.0, 3),
                  weights, targets.s_u, targets.s_l, demand=np.zeros(2))


def _flows(sol, vm):
    schedule = extract_schedule(sol, vm, 0)
    return schedule.totals, schedule.spills


class TestExtractSchedule:
    def test_non_optimal_solution(self):
        with pytest.raises(NotOptimalError):
            extract_schedule(LPSolution(LPStatus.INFEASIBLE), VarMap.layout(3), 0)

    def test_length_mismatch(self):
        sol = LPSolution(LPStatus.OPTIMAL, values=np.zeros(5), objective_value=0.0)
        with pytest.raises(NotOptimalError):
            extract_schedule(sol, VarMap.layout(3), 0)

    def test_tiny_values_clamped(self):
        vm = VarMap.layout(2)
        values = np.zeros(vm.n)
        values[list(vm.totals)] = [150.0, 150.0]
        values[list(vm.turbs)] = [150.0, 150.0]
        values[vm.spills[1]] = 5e-10
        schedule = extract_schedule(LPSolution(LPStatus.OPTIMAL, values=values, objective_value=0.0), vm, 3)
        assert schedule.start_step == 3
        assert schedule.spills[1] == 0.0


def two_step_vertices(spec, state, forecast, targets, z):
    """
    Candidate (totals[1], spills[1]) vertices of the H=2 subproblem.

    Every other column is a slack fixed by these two flows, and the objective splits into
    a piecewise-linear part in totals[1] and one in spills[1], so the optimum sits where a
    breakpoint line meets another or a bound of the flow polygon.
    """
    t0, s0 = state.committed_total_outflow, state.committed_spill_outflow
    s1 = state.storage + (forecast[0] - t0) * spec.dt
    thresholds = [targets.s_u, targets.s_l, z.s_h, spec.lws, spec.fws]
    t_lines = {0.0, t0, s0, s0 + spec.mo_turb, spec.mo_turb, spec.mo_spill, spec.max_outflow}
    t_lines |= {forecast[1] + (s1 - target) / spec.dt for target in thresholds}
    for t1 in sorted(t for t in t_lines if 0.0 <= t <= spec.max_outflow):
        for spill in {0.0, s0, t1 - spec.mo_turb, t1, spec.mo_spill}:
            if 0.0 <= spill <= min(t1, spec.mo_spill) and t1 - spill <= spec.mo_turb + 1e-9:
                yield t1, spill


class TestTwoStepOracle:
    """H=2 subproblems against closed-form and enumerated optima."""

    def test_zero_forecast_far_below_targets(self, spec, weights, targets):
        state = state_at(spec, 70.0)
        prev = Schedule.constant(-1, 150.0, 0.0, 2)
        _, vm, sol = solve_step(spec, state, np.zeros(2), weights, targets, prev=prev)
        assert sol.optimal
        schedule = extract_schedule(sol, vm, 0)
        np.testing.assert_allclose(schedule.totals, [150.0, 150.0], atol=1e-6)
        np.testing.assert_array_equal(schedule.spills, [0.0, 0.0])
        # only the below-S_L slack is active; lowering totals[1] costs more in change terms than it saves
        s1 = state.storage - 150.0 * spec.dt
        s2 = s1 - 150.0 * spec.dt
        expected = weights.w5_2 * ((targets.s_l - s1) + (targets.s_l - s2))
        assert sol.objective_value == pytest.approx(expected, rel=1e-7)

    @pytest.mark.parametrize("level, forecast, committed", [
        (70.0, [0.0, 0.0], (150.0, 0.0)),
        (77.2, [2600.0, 3100.0], (900.0, 636.0)),
        (79.3, [3500.0, 4200.0], (2000.0, 1736.0)),
    ])
    def test_matches_enumerated_vertices(self, spec, weights, targets, level, forecast, committed):
        state = state_at(spec, level, total=committed[0], spill=committed[1])
        prev = Schedule.constant(-1, committed[0], committed[1], 2)
        forecast = np.array(forecast)
        _, vm, sol = solve_step(spec, state, forecast, weights, targets, prev=prev)
        assert sol.optimal

        best = np.inf
        for t1, spill in two_step_vertices(spec, state, forecast, targets, weights):
            totals = np.array([committed[0], t1])
            spills = np.array([committed[1], spill])
            value, storages = lp_objective(spec, weights, vm, forecast, state, prev, totals, spills,
                                           targets.s_u, targets.s_l)
            if storages.min() >= spec.lws and storages.max() <= spec.fws:
                best = min(best, value)
        assert sol.objective_value == pytest.approx(best, rel=1e-7, abs=1e-9)


def family_objective(z, vm, values):
    """LP objective rebuilt family by family from the solved column values."""
    w_in, w_between = time_weights(vm.horizon)

    def col(family):
        return values[list(family)]

    value = z.w1 * values[vm.peak] + z.w2 * col(vm.spills).sum()
    value += (z.w3_i * w_in * col(vm.din_i)).sum() + (z.w3_d * w_in * col(vm.din_d)).sum()
    value += (z.w4_i * w_between * col(vm.dbw_i)).sum() + (z.w4_d * w_between * col(vm.dbw_d)).sum()
    value += LP_STORAGE_SCALE * (z.w5_1 * col(vm.mu1).sum() + z.w5_2 * col(vm.mu2).sum()
                                 + z.w5_3 * col(vm.mu3).sum())
    return value


class TestSolutionAudit:
    """Slack pairs and the objective of solved flood steps."""

    @pytest.fixture
    def solved(self, spec, weights, targets):
        state = state_at(spec, 77.0, total=400.0, spill=136.0)
        forecast = np.array([2500.0, 2700.0, 2900.0, 3100.0, 3000.0, 2800.0])
        prev = Schedule(-1, np.full(6, 900.0), np.full(6, 636.0), np.full(6, 264.0))
        _, vm, sol = solve_step(spec, state, forecast, weights, targets, prev=prev)
        assert sol.optimal
        return state, prev, vm, sol

    def test_change_pairs_split_cleanly(self, solved):
        state, prev, vm, sol = solved
        v = sol.values
        totals = v[list(vm.totals)]
        w_in, w_between = time_weights(vm.horizon)
        prev_totals = prev.aligned_totals(state.step_index, vm.horizon)
        for inc, dec in ((vm.din_i, vm.din_d), (vm.dbw_i, vm.dbw_d)):
            assert np.all(np.minimum(v[list(inc)], v[list(dec)]) <= 1e-9)
        np.testing.assert_allclose(v[list(vm.din_i)] - v[list(vm.din_d)],
                                   w_in * (totals[:-1] - totals[1:]), atol=1e-7)
        np.testing.assert_allclose(v[list(vm.dbw_i)] - v[list(vm.dbw_d)],
                                   w_between * (prev_totals - totals), atol=1e-7)

    def test_storage_slacks_are_tight(self, solved, weights, targets):
        _, _, vm, sol = solved
        v = sol.values
        storages = v[list(vm.storages)]
        scale = LP_STORAGE_SCALE
        np.testing.assert_allclose(v[list(vm.mu1)], np.maximum(storages - targets.s_u / scale, 0.0), atol=1e-7)
        np.testing.assert_allclose(v[list(vm.mu2)], np.maximum(targets.s_l / scale - storages, 0.0), atol=1e-7)
        np.testing.assert_allclose(v[list(vm.mu3)], np.maximum(storages - weights.s_h / scale, 0.0), atol=1e-7)
        assert v[vm.peak] == pytest.approx(v[list(vm.spills)].max(), abs=1e-7)

    def test_objective_recomputed_from_values(self, solved, weights):
        _, _, vm, sol = solved
        assert family_objective(weights, vm, sol.values) == pytest.approx(sol.objective_value, rel=1e-9)

    def test_committed_split_is_kept(self, solved):
        state, _, vm, sol = solved
        schedule = extract_schedule(sol, vm, 0)
        assert schedule.totals[0] == state.committed_total_outflow
        assert schedule.spills[0] == state.committed_spill_outflow
        assert schedule.turbs[0] == pytest.approx(state.committed_turb_outflow)
