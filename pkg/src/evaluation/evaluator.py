"""
Absolute performance evaluator.

Scores a candidate schedule with the nonlinear practical objectives: peak and volume of
spill, in-horizon and between-schedule outflow changes, storage exceedance against the
targets, gate continuity, peak retention and turbine-first operation. Storage is
simulated from the forecast and converted to levels through the stage-storage curve.
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.config.settings import (
    DEFAULT_EVALUATOR_WEIGHTS, DEFAULT_LARGE_VALUE, DEFAULT_S_L_LEVEL, DEFAULT_S_U_LEVEL,
    DEFAULT_W_SH, DEFAULT_W_SL, DEFAULT_W_SU, J4_EMPHASIS_FACTORS, ZERO_SPILL_THRESHOLD,
)
from src.hydro.curve import level_from_storage_clipped, storage_from_level
from src.hydro.reservoir import ReservoirSpec, ReservoirState, step_storage
from src.optimization.mpc_builder import Schedule, time_weights
from src.utils.exceptions import LengthMismatchError, NegativeStorageError, ValidationError

logger = logging.getLogger(__name__)

TERM_NAMES = ("j1", "j2", "j3", "j4", "j5", "j6", "j7", "j8")


@dataclass(frozen=True)
class EvaluatorConfig:
    """Aggregation weights e1..e8 and the storage-exceedance settings."""
    s_u: float
    s_l: float
    weights: Tuple[float, ...] = DEFAULT_EVALUATOR_WEIGHTS
    large_value: float = DEFAULT_LARGE_VALUE
    w_su: float = DEFAULT_W_SU
    w_sl: float = DEFAULT_W_SL
    w_sh: float = DEFAULT_W_SH

    def __post_init__(self):
        weights = tuple(float(e) for e in self.weights)
        if len(weights) != len(TERM_NAMES):
            raise ValidationError(f"evaluator needs {len(TERM_NAMES)} weights, got {len(weights)}")
        if any(e < 0 for e in weights) or min(self.w_su, self.w_sl, self.w_sh) < 0:
            raise ValidationError("evaluator weights must be >= 0")
        if self.large_value <= 0:
            raise ValidationError("large_value must be positive")
        if self.s_l >= self.s_u:
            raise ValidationError("s_l must be below s_u")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_levels(cls, spec: ReservoirSpec, s_u_level: float = DEFAULT_S_U_LEVEL,
                    s_l_level: float = DEFAULT_S_L_LEVEL, **kwargs) -> "EvaluatorConfig":
        return cls(
            s_u=storage_from_level(spec.curve, s_u_level),
            s_l=storage_from_level(spec.curve, s_l_level),
            **kwargs,
        )


def j4_emphasis(cfg: EvaluatorConfig, mode: str) -> EvaluatorConfig:
    """Scale e4 by the 'higher' (x4), 'lower' (x0.25) or 'default' (x1) factor."""
    if mode not in J4_EMPHASIS_FACTORS:
        raise ValidationError(f"unknown j4 mode {mode!r}; expected one of {', '.join(J4_EMPHASIS_FACTORS)}")
    weights = list(cfg.weights)
    weights[3] *= J4_EMPHASIS_FACTORS[mode]
    return replace(cfg, weights=tuple(weights))


@dataclass(frozen=True)
class PenaltyReport:
    terms: Tuple[float, ...]
    normalized: Tuple[float, ...]
    total: float
    j7_triggered: bool
    j8_triggered: bool
    fwl_reached: bool
    floor_breached: bool = False
    peak_level: float = float("nan")

    def term(self, name: str) -> float:
        return self.terms[TERM_NAMES.index(name)]

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(TERM_NAMES, self.terms))


def gate_continuity_penalty(prev_spill: float, spills: Sequence[float]) -> int:
    """Number of positions where the spillway gates open or close."""
    spills = np.asarray(spills, dtype=float)
    if spills.size == 0:
        raise ValidationError("spills must be non-empty")
    state = np.concatenate([[prev_spill], spills]) >= ZERO_SPILL_THRESHOLD
    return int(np.count_nonzero(state[1:] != state[:-1]))


def peak_retention_penalty(totals: Sequence[float], hist_peak_inflow: Optional[float],
                           large_value: float) -> float:
    """large_value when the planned peak outflow exceeds the historical peak inflow."""
    if hist_peak_inflow is None:
        return 0.0
    return large_value if float(np.max(totals)) > hist_peak_inflow else 0.0


def turbine_first_penalty(totals: Sequence[float], spills: Sequence[float], mo_turb: float,
                          large_value: float) -> float:
    """large_value when any step spills while the turbines are not at capacity."""
    totals = np.asarray(totals, dtype=float)
    spills = np.asarray(spills, dtype=float)
    if totals.shape != spills.shape:
        raise LengthMismatchError("totals and spills differ in length")
    spilling = spills >= ZERO_SPILL_THRESHOLD
    return large_value if bool(np.any(spilling & (totals <= mo_turb))) else 0.0


def simulate_storages(spec: ReservoirSpec, storage: float, forecast: Sequence[float],
                      totals: Sequence[float]) -> Tuple[np.ndarray, bool]:
    """
    Storages S_{k+1..k+H} under a schedule; the flag reports a mass balance that went
    below empty (storage held at zero from there on).
    """
    out = np.empty(len(totals))
    emptied = False
    s = storage
    for t, (inflow, total) in enumerate(zip(forecast, totals)):
        try:
            s = step_storage(s, float(inflow), max(float(total), 0.0), spec.dt)
        except NegativeStorageError:
            s, emptied = 0.0, True
        out[t] = s
    return out, emptied


def evaluate(schedule: Schedule, prev_schedule: Schedule, state: ReservoirState, forecast: Sequence[float],
             hist_peak_inflow: Optional[float], spec: ReservoirSpec, z_s_h: float, cfg: EvaluatorConfig,
             f: Optional[float] = None) -> PenaltyReport:
    """
    Score a schedule.

    Args:
        schedule: Candidate schedule starting at the current step
        prev_schedule: Schedule committed at the previous step
        state: Reservoir state at the start of the step
        forecast: Predicted inflow over the schedule's horizon (m3/s)
        hist_peak_inflow: Largest observed inflow before this step; None disables the term
        spec: Reservoir specification
        z_s_h: Highest-allowed storage of the candidate (m3)
        cfg: Evaluator configuration
        f: Storage-term normaliser; None means the horizon length

    Returns:
        PenaltyReport with raw and normalised terms
    """
    forecast = np.asarray(forecast, dtype=float)
    H = schedule.horizon
    if forecast.shape[0] != H:
        raise LengthMismatchError(f"forecast length {forecast.shape[0]} != schedule length {H}")
    totals, spills = schedule.totals, schedule.spills
    w_in, w_between = time_weights(H)
    prev_totals = prev_schedule.aligned_totals(schedule.start_step, H)

    storages, emptied = simulate_storages(spec, state.storage, forecast, totals)
    fws, lws = spec.fws, spec.lws
    fwl_reached = bool(np.any(storages >= fws))
    floor_breached = emptied or bool(np.any(storages < lws))
    peak_level = max(level_from_storage_clipped(spec.curve, s) for s in storages)

    j1 = float(np.max(spills))
    j2 = float(np.sum(spills))
    j3 = float(np.sum(np.abs(np.diff(totals)) * w_in))
    j4 = float(np.sum(np.abs(totals - prev_totals) * w_between))
    j5 = float(np.sum(
        np.maximum(storages - cfg.s_u, 0.0) * cfg.w_su
        + np.maximum(cfg.s_l - storages, 0.0) * cfg.w_sl
        + np.maximum(storages - z_s_h, 0.0) * cfg.w_sh
    ))
    j6 = float(gate_continuity_penalty(state.last_spill, spills))
    j7 = peak_retention_penalty(totals, hist_peak_inflow, cfg.large_value)
    j8 = turbine_first_penalty(totals, spills, spec.mo_turb, cfg.large_value)
    terms = (j1, j2, j3, j4, j5, j6, j7, j8)

    f = float(H if f is None else f)
    mo = spec.mo_spill
    norm5 = j5 / (fws * f)
    if fwl_reached or floor_breached:
        norm5 += cfg.large_value
    normalized = (j1 / mo, j2 / mo, j3 / mo, j4 / mo, norm5, j6, j7, j8)
    total = float(sum(e * v for e, v in zip(cfg.weights, normalized)))

    return PenaltyReport(
        terms=terms,
        normalized=normalized,
        total=total,
        j7_triggered=j7 > 0,
        j8_triggered=j8 > 0,
        fwl_reached=fwl_reached,
        floor_breached=floor_breached,
        peak_level=peak_level,
    )
