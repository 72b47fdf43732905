"""
Per-step weight sweep.

Replays the planning context of selected steps from a PD-MPC run and re-scores the
chosen weights with one gene swept over a range of values, giving the
(gene value x step) penalty map.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from src.config.settings import SWEEP_SATURATION_MARKER
from src.core.engine import RunConfig, Trace, run_event
from src.core.events import Event
from src.core.planner import PlanContext, score
from src.hydro.reservoir import ReservoirSpec, ReservoirState
from src.optimization.mpc_builder import Schedule
from src.optimization.weight_search import SHTable, decode, gene_index
from src.utils.exceptions import ValidationError

logger = logging.getLogger(__name__)


def parse_range(text: str) -> List[int]:
    """Parse an inclusive integer range 'a..b' (or a single integer)."""
    try:
        if ".." in text:
            lo, hi = (int(part) for part in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise ValidationError(f"expected an integer range like 1..20, got {text!r}") from None
    if hi < lo:
        raise ValidationError(f"empty range {text!r}")
    return list(range(lo, hi + 1))


@dataclass(frozen=True)
class SweepResult:
    gene: str
    values: Tuple[int, ...]
    steps: Tuple[int, ...]
    penalties: np.ndarray  # len(values) x len(steps)
    large_value: float
    marker: float = SWEEP_SATURATION_MARKER

    def display_grid(self) -> np.ndarray:
        """Penalties with every value at or above large_value replaced by the marker."""
        return np.where(self.penalties >= self.large_value, self.marker, self.penalties)

    def long_frame(self) -> pd.DataFrame:
        rows = []
        for j, k in enumerate(self.steps):
            for i, v in enumerate(self.values):
                p = float(self.penalties[i, j])
                rows.append({"step": k, self.gene: v, "penalty": p, "saturated": p >= self.large_value})
        return pd.DataFrame(rows)


def step_context(trace: Trace, event: Event, spec: ReservoirSpec, cfg: RunConfig, k: int) -> PlanContext:
    """Rebuild the planning context the controller saw at step k."""
    step = trace.steps[k]
    if k > 0:
        prev_schedule = trace.steps[k - 1].schedule
    else:
        prev_schedule = Schedule.constant(-1, cfg.initial_turb + cfg.initial_spill, cfg.initial_spill, cfg.horizon)
    h = len(step.forecast)
    return PlanContext(
        spec=spec,
        state=ReservoirState(step.storage_start, step.total, step.spill, step.last_spill, step_index=k),
        forecast=step.forecast,
        prev_schedule=prev_schedule,
        hist_peak=step.hist_peak,
        evaluator=cfg.evaluator_for(spec),
        demand=event.demand_or_zeros[k:k + h],
        f=cfg.f,
        solver=cfg.solver,
    )


def sweep_gene(event: Event, spec: ReservoirSpec, cfg: RunConfig, gene: str, values: Sequence[int],
               steps: Sequence[int], workers: int = 1, trace: Trace = None) -> SweepResult:
    """
    Re-score the chosen weights of each step with one gene swept.

    Args:
        event: Flood event
        spec: Reservoir specification
        cfg: PD-MPC run configuration
        gene: Gene to sweep (w1, w2, w3i, w3d, w4i, w4d, w5 or sh)
        values: Gene values, one grid row each
        steps: Steps to replay, one grid column each
        workers: Threads used for the re-scoring
        trace: Existing run of (event, cfg); a fresh run is made when omitted

    Returns:
        SweepResult with raw penalties
    """
    gene_index(gene)
    if not cfg.mode.searches:
        raise ValidationError(f"sweep replays GA-chosen weights; mode {cfg.mode.value} has none")
    if not values or not steps:
        raise ValidationError("sweep needs at least one value and one step")
    if trace is None:
        trace = run_event(event, spec, cfg)
    bad = [k for k in steps if not 0 <= k < len(trace)]
    if bad:
        raise ValidationError(f"steps {bad} outside event of length {len(trace)}")

    sh_table = SHTable.from_levels(spec, cfg.sh_levels)
    logger.info(f"🔍 Sweeping {gene} over {len(values)} values at {len(steps)} steps")

    def column(k: int) -> List[float]:
        ctx = step_context(trace, event, spec, cfg, k)
        base = trace.steps[k].chromosome
        h = len(ctx.forecast)
        return [
            score(ctx, decode(base.replace(gene, v), spec, sh_table, h, f=cfg.f, check_ranges=False))
            for v in values
        ]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            columns = list(pool.map(column, steps))
    else:
        columns = [column(k) for k in steps]

    return SweepResult(
        gene=gene,
        values=tuple(int(v) for v in values),
        steps=tuple(int(k) for k in steps),
        penalties=np.array(columns, dtype=float).T,
        large_value=cfg.evaluator_for(spec).large_value,
    )
