"""
Shared fixtures: default reservoir, a tiny GA and run-config factories.
"""

import numpy as np
import pytest

from src.core.engine import ControlMode, RunConfig
from src.core.events import Event, synthetic_event
from src.forecast.generator import ForecastConfig
from src.hydro.reservoir import ReservoirSpec
from src.optimization.weight_search import GAConfig


@pytest.fixture
def spec():
    return ReservoirSpec()


@pytest.fixture
def tiny_ga():
    return GAConfig(population=4, generations=2, tournament_size=2, elitism=1, seed=7, workers=1)


@pytest.fixture
def make_cfg(tiny_ga):
    """RunConfig factory with a GA small enough for unit tests."""
    def factory(mode=ControlMode.FIXED1, **kwargs):
        return RunConfig(mode=mode, ga=tiny_ga, **kwargs)
    return factory


@pytest.fixture
def certain():
    return ForecastConfig.certain()


@pytest.fixture
def short_event():
    """First 24 hours of the bundled double-peak hydrograph (its first flood pulse)."""
    full = synthetic_event("double_peak")
    return Event(name="double_peak_24h", inflow=full.inflow[:24])


@pytest.fixture
def constant_150():
    return Event(name="constant_150", inflow=np.full(12, 150.0))
