"""
Stage-storage curve: the level <-> storage relation of the reservoir.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Tuple, Union

import numpy as np
import pandas as pd

from src.config.settings import DEFAULT_CURVE_POINTS
from src.utils.exceptions import OutOfRangeError, ValidationError

logger = logging.getLogger(__name__)

# Relative slack accepted at the curve ends (round-off from the LP and mass balance)
_EDGE_RTOL = 1e-12


@dataclass(frozen=True)
class StageStorageCurve:
    """Monotone piecewise-linear map between level (m) and storage (m3)."""
    levels: np.ndarray
    storages: np.ndarray

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        storages = np.asarray(self.storages, dtype=float)
        if levels.ndim != 1 or levels.shape != storages.shape:
            raise ValidationError("curve levels and storages must be 1-D and the same length")
        if len(levels) < 2:
            raise ValidationError("curve needs at least 2 points")
        if np.any(np.diff(levels) <= 0):
            raise ValidationError("curve levels must be strictly increasing")
        if np.any(np.diff(storages) <= 0):
            raise ValidationError("curve storages must be strictly increasing")
        levels.setflags(write=False)
        storages.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "storages", storages)

    @classmethod
    def from_points(cls, points: Iterable[Tuple[float, float]]) -> "StageStorageCurve":
        pts = list(points)
        return cls(levels=np.array([p[0] for p in pts]), storages=np.array([p[1] for p in pts]))

    @classmethod
    def default(cls) -> "StageStorageCurve":
        return cls.from_points(DEFAULT_CURVE_POINTS)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "StageStorageCurve":
        """
        Load a curve from a two-column text table with a header line.

        Args:
            path: CSV/whitespace table with columns level_m, storage_m3

        Returns:
            Parsed curve
        """
        try:
            frame = pd.read_csv(path, sep=None, engine="python")
        except (OSError, pd.errors.ParserError) as e:
            raise ValidationError(f"cannot read curve table {path}: {e}") from e
        if frame.shape[1] != 2:
            raise ValidationError(f"curve table {path} must have exactly 2 columns")
        try:
            values = frame.astype(float).to_numpy()
        except ValueError as e:
            # header line is mandatory, so a non-numeric body is the only failure here
            raise ValidationError(f"curve table {path} has non-numeric rows: {e}") from e
        logger.info(f"Loaded stage-storage curve with {len(values)} points from {path}")
        return cls(levels=values[:, 0], storages=values[:, 1])

    @property
    def level_range(self) -> Tuple[float, float]:
        return float(self.levels[0]), float(self.levels[-1])

    @property
    def storage_range(self) -> Tuple[float, float]:
        return float(self.storages[0]), float(self.storages[-1])

    def points(self):
        return list(zip(self.levels.tolist(), self.storages.tolist()))


def _check_in(value: float, lo: float, hi: float, what: str) -> float:
    slack = _EDGE_RTOL * max(abs(lo), abs(hi))
    if not np.isfinite(value) or value < lo - slack or value > hi + slack:
        raise OutOfRangeError(f"{what} {value!r} outside curve range [{lo!r}, {hi!r}]")
    return min(max(value, lo), hi)


def level_from_storage(curve: StageStorageCurve, storage: float) -> float:
    """Level (m) for a storage (m3), linear between anchors."""
    lo, hi = curve.storage_range
    s = _check_in(float(storage), lo, hi, "storage")
    return float(np.interp(s, curve.storages, curve.levels))


def storage_from_level(curve: StageStorageCurve, level: float) -> float:
    """Storage (m3) for a level (m); exact inverse of level_from_storage."""
    lo, hi = curve.level_range
    h = _check_in(float(level), lo, hi, "level")
    return float(np.interp(h, curve.levels, curve.storages))


def level_from_storage_clipped(curve: StageStorageCurve, storage: float) -> float:
    """Level for a storage, saturating at the curve ends instead of raising."""
    lo, hi = curve.storage_range
    return float(np.interp(min(max(float(storage), lo), hi), curve.storages, curve.levels))
