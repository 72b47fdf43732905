"""
Core module for the PD-MPC flood-control engine
Contains the receding-horizon controller, planning step, metrics and mode comparison
"""

from .engine import (
    FIXED1, FIXED2, ControlMode, FixedWeights, FloodController, RunConfig, Trace, TraceStep, run_event,
)
from .events import Event, builtin_names, constant_event, synthetic_event
from .metrics import Metrics, compute_metrics
from .comparison import ComparisonRow, ComparisonTable, compare_modes

__all__ = [
    'FIXED1',
    'FIXED2',
    'ControlMode',
    'FixedWeights',
    'FloodController',
    'RunConfig',
    'Trace',
    'TraceStep',
    'run_event',
    'Event',
    'builtin_names',
    'constant_event',
    'synthetic_event',
    'Metrics',
    'compute_metrics',
    'ComparisonRow',
    'ComparisonTable',
    'compare_modes',
]
