"""
Synthetic inflow forecasts: smoothed true inflow times horizon-growing Gaussian noise.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.config.settings import (
    DEFAULT_FORECAST_A, DEFAULT_FORECAST_B, DEFAULT_FORECAST_C, DEFAULT_FORECAST_WINDOW,
)
from src.utils.exceptions import HorizonExceedsSeriesError, IndexOutOfRangeError, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ForecastConfig:
    """Noise model of the predicted inflow"""
    a: float = DEFAULT_FORECAST_A
    b: float = DEFAULT_FORECAST_B
    c: float = DEFAULT_FORECAST_C
    window: int = DEFAULT_FORECAST_WINDOW

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValidationError("forecast a and b must be >= 0")
        if not 0 < self.c <= 1:
            raise ValidationError("forecast c must lie in (0, 1]")
        if self.window < 1:
            raise ValidationError("forecast window must be >= 1")

    @classmethod
    def certain(cls) -> "ForecastConfig":
        """Noise-free, unsmoothed forecast: reproduces the true inflow."""
        return cls(a=0.0, b=0.0, c=DEFAULT_FORECAST_C, window=1)


def smooth_inflow(real_inflow: Sequence[float], t: int, window: int) -> float:
    """Trailing moving average of the true inflow, truncated at the series start."""
    if window < 1:
        raise ValidationError("window must be >= 1")
    if not 0 <= t < len(real_inflow):
        raise IndexOutOfRangeError(f"index {t} outside series of length {len(real_inflow)}")
    lo = max(0, t - window + 1)
    return float(np.mean(np.asarray(real_inflow[lo:t + 1], dtype=float)))


def draw_multipliers(cfg: ForecastConfig, horizon: int, rng: np.random.Generator) -> np.ndarray:
    """One clamped noise multiplier per horizon position T = 0..horizon-1."""
    std = cfg.a + np.arange(horizon) * cfg.b
    omega = 1.0 + rng.normal(0.0, std)
    return np.where(omega >= cfg.c, omega, cfg.c)


def generate_forecast(cfg: ForecastConfig, real_inflow: Sequence[float], k: int, horizon: int,
                      rng: np.random.Generator) -> np.ndarray:
    """
    Predicted inflow for times k..k+horizon-1.

    Args:
        cfg: Noise model
        real_inflow: True hourly inflow (m3/s)
        k: First forecast time
        horizon: Number of forecast positions
        rng: Random source, consumed for exactly `horizon` draws

    Returns:
        Non-negative forecast of length horizon
    """
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    if k < 0 or k + horizon > len(real_inflow):
        raise HorizonExceedsSeriesError(
            f"forecast {k}..{k + horizon - 1} runs past series of length {len(real_inflow)}"
        )
    smoothed = np.array([smooth_inflow(real_inflow, k + T, cfg.window) for T in range(horizon)])
    omega = draw_multipliers(cfg, horizon, rng)
    return np.maximum(smoothed * omega, 0.0)
