"""
Forecast module: synthetic predicted inflow for the receding-horizon loop
"""

from .generator import ForecastConfig, draw_multipliers, generate_forecast, smooth_inflow

__all__ = [
    'ForecastConfig',
    'draw_multipliers',
    'generate_forecast',
    'smooth_inflow',
]
