"""
Reservoir physics: specification, state, mass balance and operational constraints.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.config.settings import (
    DEFAULT_DT, DEFAULT_FWL, DEFAULT_LWL, DEFAULT_MO_SPILL, DEFAULT_MO_TURB,
    DEFAULT_NHWL, DEFAULT_SPILLWAY_CREST,
)
from src.hydro.curve import StageStorageCurve, storage_from_level
from src.utils.exceptions import LengthMismatchError, NegativeStorageError, ValidationError

logger = logging.getLogger(__name__)

# Tolerances for constraint checks: flows in m3/s, storage relative to FWS
FLOW_TOL = 1e-6
STORAGE_RTOL = 1e-9


@dataclass(frozen=True)
class ReservoirSpec:
    """Physical constants of the reservoir plus its stage-storage curve."""
    fwl: float = DEFAULT_FWL
    nhwl: float = DEFAULT_NHWL
    lwl: float = DEFAULT_LWL
    spillway_crest: float = DEFAULT_SPILLWAY_CREST
    mo_turb: float = DEFAULT_MO_TURB
    mo_spill: float = DEFAULT_MO_SPILL
    curve: StageStorageCurve = field(default_factory=StageStorageCurve.default)
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if not (self.lwl < self.spillway_crest < self.nhwl < self.fwl):
            raise ValidationError(
                f"levels must satisfy lwl < spillway_crest < nhwl < fwl, got "
                f"{self.lwl}, {self.spillway_crest}, {self.nhwl}, {self.fwl}"
            )
        if self.mo_turb <= 0 or self.mo_spill <= 0 or self.dt <= 0:
            raise ValidationError("mo_turb, mo_spill and dt must be positive")
        lo, hi = self.curve.level_range
        if lo > self.lwl or hi < self.fwl:
            raise ValidationError(f"curve range [{lo}, {hi}] does not cover [LWL, FWL]")

    @property
    def lws(self) -> float:
        return storage_from_level(self.curve, self.lwl)

    @property
    def fws(self) -> float:
        return storage_from_level(self.curve, self.fwl)

    @property
    def max_outflow(self) -> float:
        return self.mo_turb + self.mo_spill


@dataclass(frozen=True)
class ReservoirState:
    """Augmented state at the start of a step: storage plus the committed outflows."""
    storage: float
    committed_total_outflow: float
    committed_spill_outflow: float
    last_spill: float
    step_index: int = 0

    def __post_init__(self):
        if self.storage < 0:
            raise ValidationError(f"storage must be >= 0, got {self.storage}")
        if self.committed_total_outflow < 0 or self.committed_spill_outflow < 0 or self.last_spill < 0:
            raise ValidationError("committed outflows must be >= 0")
        if self.committed_spill_outflow > self.committed_total_outflow + FLOW_TOL:
            raise ValidationError("committed spill exceeds committed total outflow")

    @property
    def committed_turb_outflow(self) -> float:
        return self.committed_total_outflow - self.committed_spill_outflow


def step_storage(storage: float, inflow: float, outflow_total: float, dt: float) -> float:
    """
    Advance storage by one step of the linear reservoir model.

    Args:
        storage: Storage at the start of the step (m3)
        inflow: Mean inflow over the step (m3/s)
        outflow_total: Mean total outflow over the step (m3/s)
        dt: Step length (s)

    Returns:
        Storage at the end of the step (m3)
    """
    if inflow < 0 or outflow_total < 0 or dt <= 0:
        raise ValidationError("inflow and outflow must be >= 0 and dt > 0")
    result = storage + (inflow - outflow_total) * dt
    if result < 0:
        raise NegativeStorageError(
            f"outflow {outflow_total} m3/s over {dt} s drives storage {storage} to {result}"
        )
    return result


class ViolationKind(Enum):
    """Operational constraint that a step breaks"""
    DEMAND = "demand"
    STORAGE_LOW = "storage_below_lws"
    STORAGE_HIGH = "storage_above_fws"
    TURBINE_CAPACITY = "turbine_capacity"
    SPILL_CAPACITY = "spill_capacity"
    SPILL_BELOW_CREST = "spill_below_crest"
    SPILL_EXCEEDS_TOTAL = "spill_exceeds_total"
    NEGATIVE_FLOW = "negative_flow"


@dataclass(frozen=True)
class Violation:
    step: int
    kind: ViolationKind
    value: float
    limit: float


@dataclass
class ViolationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations

    def steps(self) -> List[int]:
        return sorted({v.step for v in self.violations})

    def of_kind(self, kind: ViolationKind) -> List[Violation]:
        return [v for v in self.violations if v.kind == kind]

    def summary(self) -> Dict[str, List[int]]:
        """Steps of each violated constraint kind."""
        return {kind.value: [v.step for v in self.of_kind(kind)] for kind in ViolationKind if self.of_kind(kind)}

    def __len__(self) -> int:
        return len(self.violations)


def check_constraints(spec: ReservoirSpec, totals: Sequence[float], spills: Sequence[float],
                      storages: Sequence[float], demand: Optional[Sequence[float]] = None) -> ViolationReport:
    """
    Validate committed series against the operational constraints.

    Args:
        spec: Reservoir specification
        totals: Total outflow per step (m3/s)
        spills: Spillway outflow per step (m3/s)
        storages: Storage per step, length n or n+1 (m3)
        demand: Downstream demand per step (m3/s), zeros when omitted

    Returns:
        Report listing every violation; empty means feasible
    """
    totals = np.asarray(totals, dtype=float)
    spills = np.asarray(spills, dtype=float)
    storages = np.asarray(storages, dtype=float)
    n = len(totals)
    demand = np.zeros(n) if demand is None else np.asarray(demand, dtype=float)
    if len(spills) != n or len(demand) != n or len(storages) not in (n, n + 1):
        raise LengthMismatchError(
            f"series lengths differ: totals={n}, spills={len(spills)}, "
            f"storages={len(storages)}, demand={len(demand)}"
        )

    report = ViolationReport()
    lws, fws = spec.lws, spec.fws
    s_tol = STORAGE_RTOL * fws
    crest_storage = storage_from_level(spec.curve, spec.spillway_crest)
    turbs = totals - spills

    for t in range(n):
        if totals[t] < -FLOW_TOL or spills[t] < -FLOW_TOL:
            report.violations.append(Violation(t, ViolationKind.NEGATIVE_FLOW, min(totals[t], spills[t]), 0.0))
        if totals[t] < demand[t] - FLOW_TOL:
            report.violations.append(Violation(t, ViolationKind.DEMAND, totals[t], demand[t]))
        if spills[t] > totals[t] + FLOW_TOL:
            report.violations.append(Violation(t, ViolationKind.SPILL_EXCEEDS_TOTAL, spills[t], totals[t]))
        if turbs[t] > spec.mo_turb + FLOW_TOL:
            report.violations.append(Violation(t, ViolationKind.TURBINE_CAPACITY, turbs[t], spec.mo_turb))
        if spills[t] > spec.mo_spill + FLOW_TOL:
            report.violations.append(Violation(t, ViolationKind.SPILL_CAPACITY, spills[t], spec.mo_spill))
        if t < len(storages) and spills[t] > FLOW_TOL and storages[t] < crest_storage - s_tol:
            report.violations.append(Violation(t, ViolationKind.SPILL_BELOW_CREST, spills[t], crest_storage))

    for t, s in enumerate(storages):
        if s < lws - s_tol:
            report.violations.append(Violation(t, ViolationKind.STORAGE_LOW, s, lws))
        elif s > fws + s_tol:
            report.violations.append(Violation(t, ViolationKind.STORAGE_HIGH, s, fws))

    if report.violations:
        logger.debug(f"Constraint check found {len(report)} violations at steps {report.steps()}")
    return report


