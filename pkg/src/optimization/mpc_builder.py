"""
MPC subproblem assembly.

Translates (reservoir state, forecast, weight vector, committed first outflow) into a
StandardFormLP with the linearised objective and constraints of the flood-control
model, and maps LP solutions back to outflow schedules.

Storages and storage slacks enter the LP in units of LP_STORAGE_SCALE m3 (hm3) so that
every column has a comparable magnitude; objective coefficients are rescaled to match,
leaving the objective value in the original units.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from src.config.settings import (
    DEFAULT_FWS_SOFT_PENALTY, LP_STORAGE_SCALE, VALUE_ZERO_CLAMP,
)
from src.hydro.curve import storage_from_level
from src.hydro.reservoir import ReservoirSpec, ReservoirState
from src.optimization.linprog import LPSolution, StandardFormLP
from src.utils.exceptions import (
    InconsistentLengthsError, NotOptimalError, StateOutOfRangeError, ValidationError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Schedule:
    """Planned total/spillway/turbine outflows for times start_step..start_step+H-1."""
    start_step: int
    totals: np.ndarray
    spills: np.ndarray
    turbs: np.ndarray

    def __post_init__(self):
        totals = np.asarray(self.totals, dtype=float)
        spills = np.asarray(self.spills, dtype=float)
        turbs = np.asarray(self.turbs, dtype=float)
        if not (totals.shape == spills.shape == turbs.shape) or totals.ndim != 1 or totals.size == 0:
            raise InconsistentLengthsError("schedule series must be non-empty and equally long")
        object.__setattr__(self, "totals", totals)
        object.__setattr__(self, "spills", spills)
        object.__setattr__(self, "turbs", turbs)

    @classmethod
    def constant(cls, start_step: int, total: float, spill: float, horizon: int) -> "Schedule":
        return cls(
            start_step=start_step,
            totals=np.full(horizon, float(total)),
            spills=np.full(horizon, float(spill)),
            turbs=np.full(horizon, float(total) - float(spill)),
        )

    @property
    def horizon(self) -> int:
        return self.totals.shape[0]

    def aligned_totals(self, k: int, horizon: int) -> np.ndarray:
        """
        This schedule's totals at times k..k+horizon-1.

        Times past the end of the schedule repeat its last entry.
        """
        offset = k - self.start_step
        if offset < 0:
            raise InconsistentLengthsError(
                f"schedule starting at {self.start_step} cannot precede step {k}"
            )
        idx = np.minimum(offset + np.arange(horizon), self.horizon - 1)
        return self.totals[idx]


@dataclass(frozen=True)
class TargetLevels:
    """Target storages (m3): upper S_U, lower S_L and the operator's highest S_H."""
    s_u: float
    s_l: float
    s_h: float

    def validate(self, spec: ReservoirSpec):
        if not (self.s_l < self.s_u <= self.s_h < spec.fws):
            raise ValidationError(
                f"targets must satisfy s_l < s_u <= s_h < FWS, got {self.s_l}, {self.s_u}, {self.s_h}"
            )

    @classmethod
    def from_levels(cls, spec: ReservoirSpec, s_u_level: float, s_l_level: float,
                    s_h_level: float) -> "TargetLevels":
        targets = cls(
            s_u=storage_from_level(spec.curve, s_u_level),
            s_l=storage_from_level(spec.curve, s_l_level),
            s_h=storage_from_level(spec.curve, s_h_level),
        )
        targets.validate(spec)
        return targets


@dataclass(frozen=True)
class WeightVector:
    """Objective weights of the MPC subproblem plus the highest-allowed storage s_h (m3)."""
    w1: float
    w2: float
    w3_i: float
    w3_d: float
    w4_i: float
    w4_d: float
    w5_1: float
    w5_2: float
    w5_3: float
    s_h: float

    def __post_init__(self):
        weights = self.as_tuple()
        if any(not np.isfinite(w) or w < 0 for w in weights):
            raise ValidationError(f"weights must be finite and >= 0, got {weights}")
        if self.w5_1 <= 0:
            raise ValidationError("w5_1 must be positive")

    def as_tuple(self) -> Tuple[float, ...]:
        return (self.w1, self.w2, self.w3_i, self.w3_d, self.w4_i, self.w4_d,
                self.w5_1, self.w5_2, self.w5_3)


@dataclass(frozen=True)
class VarMap:
    """Column ranges of each variable family in the MPC LP."""
    horizon: int
    totals: range
    spills: range
    turbs: range
    storages: range
    din_i: range
    din_d: range
    dbw_i: range
    dbw_d: range
    mu1: range
    mu2: range
    mu3: range
    peak: int
    soft_hi: Optional[range] = None
    soft_lo: Optional[range] = None
    n: int = field(default=0)

    @classmethod
    def layout(cls, horizon: int, softened: bool = False) -> "VarMap":
        H = horizon
        sizes = [("totals", H), ("spills", H), ("turbs", H), ("storages", H),
                 ("din_i", H - 1), ("din_d", H - 1), ("dbw_i", H), ("dbw_d", H),
                 ("mu1", H), ("mu2", H), ("mu3", H)]
        ranges = {}
        start = 0
        for name, size in sizes:
            ranges[name] = range(start, start + size)
            start += size
        peak = start
        start += 1
        soft_hi = soft_lo = None
        if softened:
            soft_hi = range(start, start + H)
            soft_lo = range(start + H, start + 2 * H)
            start += 2 * H
        return cls(horizon=H, peak=peak, soft_hi=soft_hi, soft_lo=soft_lo, n=start, **ranges)

    @property
    def softened(self) -> bool:
        return self.soft_hi is not None


def time_weights(horizon: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Change-penalty weights that favour early schedule positions.

    Args:
        horizon: Horizon length H

    Returns:
        (w_in for positions 1..H-1, w_between for positions 0..H-1)
    """
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    pos = np.arange(horizon, dtype=float)  # t - k
    w_in = 1.0 / ((pos[1:] + 1.0) * 3.0)
    w_between = np.where(pos <= 3, 1.0 / (pos + 1.0), 1.0 / ((pos + 1.0) * 2.0))
    return w_in, w_between


def build(spec: ReservoirSpec, state: ReservoirState, forecast: Sequence[float], prev_schedule: Schedule,
          z: WeightVector, s_u: float, s_l: float, demand: Optional[Sequence[float]] = None,
          softened: bool = False,
          soft_penalty: float = DEFAULT_FWS_SOFT_PENALTY) -> Tuple[StandardFormLP, VarMap]:
    """
    Assemble the MPC LP for step state.step_index.

    Args:
        spec: Reservoir specification
        state: Storage and committed outflows at the start of the step
        forecast: Predicted inflow over the horizon (m3/s)
        prev_schedule: Schedule committed at the previous step
        z: Weight vector (s_h included)
        s_u: Upper target storage (m3)
        s_l: Lower target storage (m3)
        demand: Minimum total outflow per horizon position, zeros when omitted
        softened: Replace the hard LWS/FWS storage bounds with penalised slacks
        soft_penalty: Objective coefficient of each softening slack (per LP storage unit)

    Returns:
        (lp, var_map)
    """
    forecast = np.asarray(forecast, dtype=float)
    H = forecast.shape[0]
    demand = np.zeros(H) if demand is None else np.asarray(demand, dtype=float)
    if H < 1 or demand.shape[0] != H:
        raise InconsistentLengthsError(f"forecast length {H} and demand length {demand.shape[0]} disagree")

    # the softened build is the recovery path for states that left the curve
    s_lo, s_hi = spec.curve.storage_range
    if not softened and not s_lo <= state.storage <= s_hi:
        raise StateOutOfRangeError(f"storage {state.storage} outside curve range [{s_lo}, {s_hi}]")

    k = state.step_index
    prev_totals = prev_schedule.aligned_totals(k, H)
    w_in, w_between = time_weights(H)
    vm = VarMap.layout(H, softened)
    n = vm.n
    scale = LP_STORAGE_SCALE
    dt_s = spec.dt / scale
    lws, fws = spec.lws / scale, spec.fws / scale

    c = np.zeros(n)
    c[vm.peak] = z.w1
    c[list(vm.spills)] = z.w2
    c[list(vm.din_i)] = z.w3_i * w_in
    c[list(vm.din_d)] = z.w3_d * w_in
    c[list(vm.dbw_i)] = z.w4_i * w_between
    c[list(vm.dbw_d)] = z.w4_d * w_between
    c[list(vm.mu1)] = z.w5_1 * scale
    c[list(vm.mu2)] = z.w5_2 * scale
    c[list(vm.mu3)] = z.w5_3 * scale
    if softened:
        c[list(vm.soft_hi)] = soft_penalty
        c[list(vm.soft_lo)] = soft_penalty

    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    for t in range(H):
        lower[vm.totals[t]] = max(demand[t], 0.0)
        upper[vm.totals[t]] = spec.max_outflow
        upper[vm.spills[t]] = spec.mo_spill
        upper[vm.turbs[t]] = spec.mo_turb
        if not softened:
            lower[vm.storages[t]] = lws
            upper[vm.storages[t]] = fws
    # time k is already implemented: the total and its spill/turbine split were committed together
    lower[vm.totals[0]] = upper[vm.totals[0]] = state.committed_total_outflow
    lower[vm.spills[0]] = upper[vm.spills[0]] = state.committed_spill_outflow

    eq_rows, eq_rhs, ge_rows, ge_rhs = [], [], [], []

    def row(entries):
        r = np.zeros(n)
        for j, v in entries:
            r[j] += v
        return r

    for t in range(H):
        eq_rows.append(row([(vm.totals[t], 1.0), (vm.spills[t], -1.0), (vm.turbs[t], -1.0)]))
        eq_rhs.append(0.0)

    eq_rows.append(row([(vm.totals[0], 1.0)]))
    eq_rhs.append(state.committed_total_outflow)

    for t in range(1, H):
        eq_rows.append(row([(vm.din_i[t - 1], 1.0), (vm.din_d[t - 1], -1.0),
                            (vm.totals[t], w_in[t - 1]), (vm.totals[t - 1], -w_in[t - 1])]))
        eq_rhs.append(0.0)

    for t in range(H):
        eq_rows.append(row([(vm.dbw_i[t], 1.0), (vm.dbw_d[t], -1.0), (vm.totals[t], w_between[t])]))
        eq_rhs.append(prev_totals[t] * w_between[t])

    for t in range(H):
        entries = [(vm.storages[t], 1.0), (vm.totals[t], dt_s)]
        rhs = forecast[t] * dt_s
        if t == 0:
            rhs += state.storage / scale
        else:
            entries.append((vm.storages[t - 1], -1.0))
        eq_rows.append(row(entries))
        eq_rhs.append(rhs)

    for t in range(H):
        ge_rows.append(row([(vm.mu1[t], 1.0), (vm.storages[t], -1.0)]))
        ge_rhs.append(-s_u / scale)
        ge_rows.append(row([(vm.mu2[t], 1.0), (vm.storages[t], 1.0)]))
        ge_rhs.append(s_l / scale)
        ge_rows.append(row([(vm.mu3[t], 1.0), (vm.storages[t], -1.0)]))
        ge_rhs.append(-z.s_h / scale)
        ge_rows.append(row([(vm.peak, 1.0), (vm.spills[t], -1.0)]))
        ge_rhs.append(0.0)
        if softened:
            ge_rows.append(row([(vm.soft_hi[t], 1.0), (vm.storages[t], -1.0)]))
            ge_rhs.append(-fws)
            ge_rows.append(row([(vm.soft_lo[t], 1.0), (vm.storages[t], 1.0)]))
            ge_rhs.append(lws)

    lp = StandardFormLP(
        objective=c,
        eq_matrix=np.array(eq_rows),
        eq_rhs=np.array(eq_rhs),
        ineq_matrix=np.array(ge_rows),
        ineq_rhs=np.array(ge_rhs),
        lower=lower,
        upper=upper,
    )
    logger.debug(f"Built MPC LP for step {k}: H={H}, n={n}, softened={softened}")
    return lp, vm


def extract_schedule(sol: LPSolution, var_map: VarMap, k: int) -> Schedule:
    """
    Read the outflow schedule out of an optimal LP solution.

    Raises:
        NotOptimalError: solution is not optimal or does not match the variable map
    """
    if not sol.optimal or sol.values is None:
        raise NotOptimalError(f"cannot extract a schedule from a {sol.status.value} solution")
    values = np.asarray(sol.values, dtype=float)
    if values.shape[0] != var_map.n:
        raise NotOptimalError(f"solution has {values.shape[0]} values, variable map expects {var_map.n}")
    values = np.where(np.abs(values) < VALUE_ZERO_CLAMP, 0.0, values)
    return Schedule(
        start_step=k,
        totals=values[list(var_map.totals)],
        spills=values[list(var_map.spills)],
        turbs=values[list(var_map.turbs)],
    )


def extract_storages(sol: LPSolution, var_map: VarMap) -> np.ndarray:
    """Planned storages S_{k+1..k+H} in m3."""
    if not sol.optimal or sol.values is None:
        raise NotOptimalError("no storages in a non-optimal solution")
    return np.asarray(sol.values, dtype=float)[list(var_map.storages)] * LP_STORAGE_SCALE
