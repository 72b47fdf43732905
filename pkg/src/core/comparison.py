"""
Mode comparison: run an event under several control modes, seeds and horizons and
tabulate the metrics of every cell.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import pandas as pd

from src.config.settings import DEFAULT_CHANGE_TOL
from src.core.engine import ControlMode, RunConfig, run_event
from src.core.events import Event
from src.core.metrics import Metrics, compute_metrics
from src.hydro.reservoir import ReservoirSpec
from src.utils.exceptions import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ComparisonRow:
    mode: str
    seed: int
    horizon: int
    metrics: Metrics
    label: str = ""

    def to_dict(self):
        row = {"label": self.label, "mode": self.mode, "seed": self.seed, "horizon": self.horizon}
        row.update(self.metrics.to_dict())
        return row


@dataclass
class ComparisonTable:
    event_name: str
    rows: List[ComparisonRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_dict() for r in self.rows])

    def median(self, column: str, **match) -> float:
        """Median of a metrics column over the rows whose fields equal `match`."""
        frame = self.to_frame()
        for key, value in match.items():
            frame = frame[frame[key] == value]
        if frame.empty:
            raise ValidationError(f"no comparison rows match {match}")
        return float(frame[column].median())

    def extend(self, other: "ComparisonTable"):
        self.rows.extend(other.rows)


def compare_modes(event: Event, spec: ReservoirSpec, base_cfg: RunConfig, modes: Sequence[ControlMode],
                  seeds: Sequence[int], horizons: Optional[Sequence[int]] = None,
                  change_tol: float = DEFAULT_CHANGE_TOL, workers: int = 1, label: str = "") -> ComparisonTable:
    """
    Run every (mode, seed, horizon) cell and collect its metrics.

    Args:
        event: Flood event
        spec: Reservoir specification
        base_cfg: Configuration the cells are derived from
        modes: Control modes to compare
        seeds: Run seeds
        horizons: Prediction horizons; defaults to base_cfg.horizon
        change_tol: Revision threshold for schedule_changes
        workers: Cells run concurrently on this many threads
        label: Tag copied into every row

    Returns:
        ComparisonTable with one row per cell, in (mode, seed, horizon) order
    """
    if not modes or not seeds:
        raise ValidationError("compare needs at least one mode and one seed")
    horizons = list(horizons) if horizons else [base_cfg.horizon]
    cells = [(mode, seed, h) for mode in modes for seed in seeds for h in horizons]
    logger.info(f"📊 Comparing {len(modes)} modes x {len(seeds)} seeds x {len(horizons)} horizons on {event.name!r}")

    def run_cell(cell) -> ComparisonRow:
        mode, seed, h = cell
        cfg = replace(base_cfg, mode=mode, seed=int(seed), horizon=int(h))
        metrics = compute_metrics(run_event(event, spec, cfg), change_tol)
        return ComparisonRow(mode=mode.value, seed=int(seed), horizon=int(h), metrics=metrics, label=label)

    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(c) for c in cells]
    return ComparisonTable(event_name=event.name, rows=rows)
