"""
Run summary metrics: peak outflow, water-level extremes, schedule revisions and penalties.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict

import numpy as np

from src.config.settings import DEFAULT_CHANGE_TOL
from src.core.engine import Trace
from src.optimization.mpc_builder import Schedule
from src.utils.exceptions import EmptyTraceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Metrics:
    peak_outflow: float
    peak_rwl: float
    lowest_rwl: float
    schedule_changes: int
    total_penalty: float
    max_penalty: float
    fallback_steps: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def schedule_revised(previous: Schedule, current: Schedule, change_tol: float) -> bool:
    """True when the schedules differ by more than change_tol at any time both cover."""
    offset = current.start_step - previous.start_step
    overlap = min(previous.horizon - offset, current.horizon)
    if offset < 0 or overlap <= 0:
        return False
    diff = np.abs(current.totals[:overlap] - previous.totals[offset:offset + overlap])
    return bool(np.max(diff) > change_tol)


def compute_metrics(trace: Trace, change_tol: float = DEFAULT_CHANGE_TOL) -> Metrics:
    """
    Summarise a trace.

    Args:
        trace: Completed run
        change_tol: Revision threshold for schedule_changes (m3/s)

    Returns:
        Metrics of the run
    """
    if len(trace) == 0:
        raise EmptyTraceError("cannot compute metrics of an empty trace")
    levels = trace.levels
    penalties = [s.report.total for s in trace.steps]
    changes = sum(
        schedule_revised(prev.schedule, cur.schedule, change_tol)
        for prev, cur in zip(trace.steps, trace.steps[1:])
    )
    return Metrics(
        peak_outflow=float(np.max(trace.totals)),
        peak_rwl=float(np.max(levels)),
        lowest_rwl=float(np.min(levels)),
        schedule_changes=int(changes),
        total_penalty=float(sum(penalties)),
        max_penalty=float(max(penalties)),
        fallback_steps=len(trace.flagged_steps),
    )
