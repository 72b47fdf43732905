"""
Tests for the synthetic inflow forecast.
"""

import numpy as np
import pytest

from src.forecast.generator import ForecastConfig, draw_multipliers, generate_forecast, smooth_inflow
from src.utils.exceptions import HorizonExceedsSeriesError, IndexOutOfRangeError, ValidationError


class FixedDrawRng:
    """Stands in for a Generator: returns a fixed deviation and records the requested spread."""

    def __init__(self, deviation):
        self.deviation = deviation
        self.scale = None

    def normal(self, loc, scale):
        self.scale = np.asarray(scale, dtype=float)
        return np.full(self.scale.shape, loc + self.deviation)


class TestSmoothInflow:
    def test_trailing_mean(self):
        assert smooth_inflow([100.0, 200.0, 300.0], 2, 3) == 200.0

    def test_window_truncated_at_start(self):
        assert smooth_inflow([100.0, 200.0, 300.0], 0, 3) == 100.0
        assert smooth_inflow([100.0, 200.0, 300.0], 1, 3) == 150.0

    def test_constant_series(self):
        series = np.full(10, 42.5)
        assert all(smooth_inflow(series, t, 4) == 42.5 for t in range(10))

    def test_index_out_of_range(self):
        with pytest.raises(IndexOutOfRangeError):
            smooth_inflow([1.0, 2.0], 2, 1)


class TestNoiseModel:
    def test_spread_grows_with_horizon(self):
        rng = FixedDrawRng(0.0)
        draw_multipliers(ForecastConfig(), 4, rng)
        assert rng.scale == pytest.approx([0.05, 0.08, 0.11, 0.14])

    def test_small_multiplier_is_clamped(self):
        omega = draw_multipliers(ForecastConfig(), 1, FixedDrawRng(-0.98))
        assert omega[0] == pytest.approx(0.1)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            ForecastConfig(c=0.0)
        with pytest.raises(ValidationError):
            ForecastConfig(window=0)


class TestGenerateForecast:
    def test_zero_inflow_gives_zero_forecast(self):
        rng = np.random.default_rng(3)
        forecast = generate_forecast(ForecastConfig(), np.zeros(10), 2, 6, rng)
        assert np.all(forecast == 0.0)

    def test_certain_forecast_reproduces_inflow(self):
        inflow = np.array([250.0, 400.0, 900.0, 1500.0, 1200.0, 800.0])
        rng = np.random.default_rng(11)
        forecast = generate_forecast(ForecastConfig.certain(), inflow, 1, 4, rng)
        np.testing.assert_array_equal(forecast, inflow[1:5])

    def test_same_seed_same_forecast(self):
        inflow = np.linspace(200.0, 3000.0, 30)
        a = generate_forecast(ForecastConfig(), inflow, 5, 12, np.random.default_rng(99))
        b = generate_forecast(ForecastConfig(), inflow, 5, 12, np.random.default_rng(99))
        np.testing.assert_array_equal(a, b)

    def test_forecast_never_negative(self):
        inflow = np.linspace(200.0, 3000.0, 30)
        rng = np.random.default_rng(5)
        for k in range(0, 24):
            assert np.all(generate_forecast(ForecastConfig(a=0.5, b=0.5), inflow, k, 6, rng) >= 0.0)

    def test_horizon_past_series_end(self):
        with pytest.raises(HorizonExceedsSeriesError):
            generate_forecast(ForecastConfig(), np.ones(5), 3, 3, np.random.default_rng(0))
