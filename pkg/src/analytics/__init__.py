"""
Analytics: per-step weight sweeps over completed runs
"""

from .penalty_sweep import SweepResult, parse_range, step_context, sweep_gene

__all__ = ['SweepResult', 'parse_range', 'step_context', 'sweep_gene']
