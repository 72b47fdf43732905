"""
Flood events: hourly true inflow (and optional demand), plus the bundled synthetic hydrographs.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.utils.exceptions import EventValidationError, ValidationError

logger = logging.getLogger(__name__)

BASE_FLOW = 250.0  # m3/s
PULSE_SHAPE = 3.0


@dataclass(frozen=True)
class Event:
    """Hourly inflow series (m3/s) with an optional downstream demand."""
    name: str
    inflow: np.ndarray
    demand: Optional[np.ndarray] = None

    def __post_init__(self):
        inflow = np.asarray(self.inflow, dtype=float)
        if inflow.ndim != 1 or inflow.shape[0] < 2:
            raise EventValidationError(f"event {self.name!r} needs at least 2 inflow steps")
        if not np.all(np.isfinite(inflow)) or np.any(inflow < 0):
            raise EventValidationError(f"event {self.name!r} has negative or non-finite inflow")
        object.__setattr__(self, "inflow", inflow)
        if self.demand is not None:
            demand = np.asarray(self.demand, dtype=float)
            if demand.shape != inflow.shape:
                raise EventValidationError(f"event {self.name!r} demand length differs from inflow")
            if not np.all(np.isfinite(demand)) or np.any(demand < 0):
                raise EventValidationError(f"event {self.name!r} has negative or non-finite demand")
            object.__setattr__(self, "demand", demand)

    def __len__(self) -> int:
        return self.inflow.shape[0]

    @property
    def demand_or_zeros(self) -> np.ndarray:
        return self.demand if self.demand is not None else np.zeros(len(self))

    @property
    def peak_inflow(self) -> float:
        return float(np.max(self.inflow))


def gamma_pulse(hours: int, start: float, time_to_peak: float, peak: float,
                shape: float = PULSE_SHAPE) -> np.ndarray:
    """Gamma-shaped hydrograph pulse that reaches `peak` at hour start + time_to_peak."""
    t = (np.arange(hours, dtype=float) - start) / time_to_peak
    pulse = np.zeros(hours)
    rising = t > 0
    pulse[rising] = peak * t[rising] ** shape * np.exp(shape * (1.0 - t[rising]))
    return pulse


# name -> (hours, pulses as (start, time_to_peak, peak))
# Each event's volume above turbine capacity stays under the NHWL to lowest-S_H storage band.
BUILTIN_EVENTS: Dict[str, Tuple[int, Tuple[Tuple[float, float, float], ...]]] = {
    "double_peak": (96, ((4.0, 4.0, 2600.0), (44.0, 4.0, 3300.0))),
    "triple_peak": (120, ((4.0, 3.0, 2500.0), (40.0, 3.0, 2800.0), (76.0, 2.5, 3400.0))),
    "single_peak": (72, ((6.0, 5.0, 4200.0),)),
}


def synthetic_event(name: str) -> Event:
    """
    Build one of the bundled synthetic hydrographs.

    Args:
        name: double_peak, triple_peak or single_peak

    Returns:
        Event with base flow plus gamma pulses
    """
    if name not in BUILTIN_EVENTS:
        raise ValidationError(f"unknown builtin event {name!r}; choose from {', '.join(BUILTIN_EVENTS)}")
    hours, pulses = BUILTIN_EVENTS[name]
    inflow = np.full(hours, BASE_FLOW)
    for start, time_to_peak, peak in pulses:
        inflow += gamma_pulse(hours, start, time_to_peak, peak)
    return Event(name=name, inflow=np.round(inflow, 3))


def constant_event(value: float, hours: int, name: str = "constant") -> Event:
    return Event(name=name, inflow=np.full(hours, float(value)))


def builtin_names() -> Sequence[str]:
    return tuple(BUILTIN_EVENTS)
