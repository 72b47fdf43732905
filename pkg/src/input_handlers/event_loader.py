"""
Event CSV ingestion and export.

Format: header `step,inflow_m3s[,demand_m3s]`, one row per hour, steps contiguous from 0.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from src.core.events import Event, synthetic_event
from src.utils.exceptions import EventParseError, EventValidationError, OutputError, ValidationError

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("step", "inflow_m3s")
DEMAND_COLUMN = "demand_m3s"
BUILTIN_PREFIX = "builtin:"


def _line(row_index: int) -> int:
    # header is line 1
    return row_index + 2


def _numeric(frame: pd.DataFrame, column: str) -> np.ndarray:
    values = pd.to_numeric(frame[column], errors="coerce")
    bad = values.isna()
    if bad.any():
        i = int(np.flatnonzero(bad.to_numpy())[0])
        raise EventParseError(f"{column} value {frame[column].iloc[i]!r} is not a number", _line(i))
    return values.to_numpy(dtype=float)


def load_event(path: Union[str, Path], name: str = None) -> Event:
    """
    Load and validate an event CSV.

    Args:
        path: Event file, or builtin:<name> for a bundled synthetic event
        name: Event name; defaults to the file stem

    Returns:
        Validated Event; demand is all zeros when the column is absent
    """
    source = str(path)
    if source.startswith(BUILTIN_PREFIX):
        return synthetic_event(source[len(BUILTIN_PREFIX):])

    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except FileNotFoundError as e:
        raise ValidationError(f"event file not found: {path}") from e
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise EventParseError(f"cannot parse {path}: {e}", 1) from e

    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise EventParseError(f"missing column(s) {', '.join(missing)}", 1)
    extra = [c for c in frame.columns if c not in REQUIRED_COLUMNS + (DEMAND_COLUMN,)]
    if extra:
        raise EventParseError(f"unexpected column(s) {', '.join(extra)}", 1)

    steps = _numeric(frame, "step")
    inflow = _numeric(frame, "inflow_m3s")
    for i, s in enumerate(steps):
        if s != i:
            raise EventValidationError(f"line {_line(i)}: expected step {i}, got {frame['step'].iloc[i]}")
    negative = np.flatnonzero(inflow < 0)
    if negative.size:
        i = int(negative[0])
        raise EventValidationError(f"line {_line(i)}: negative inflow {inflow[i]}")

    demand = None
    if DEMAND_COLUMN in frame.columns:
        demand = _numeric(frame, DEMAND_COLUMN)
        negative = np.flatnonzero(demand < 0)
        if negative.size:
            i = int(negative[0])
            raise EventValidationError(f"line {_line(i)}: negative demand {demand[i]}")

    event = Event(name=name or path.stem, inflow=inflow, demand=demand)
    logger.info(f"📥 Loaded event {event.name!r}: {len(event)} steps, peak inflow {event.peak_inflow:.2f} m3/s")
    return event


def save_event(event: Event, path: Union[str, Path]) -> Path:
    """Write an event in the CSV format load_event reads."""
    path = Path(path)
    frame = pd.DataFrame({"step": np.arange(len(event)), "inflow_m3s": event.inflow})
    if event.demand is not None:
        frame[DEMAND_COLUMN] = event.demand
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.17g")
    except OSError as e:
        raise OutputError(f"cannot write event file {path}: {e}") from e
    logger.info(f"💾 Saved event {event.name!r} to {path}")
    return path
