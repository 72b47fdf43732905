"""
Nonlinear schedule evaluator (the GA fitness).
"""

from .evaluator import (
    TERM_NAMES, EvaluatorConfig, PenaltyReport, evaluate, gate_continuity_penalty, j4_emphasis,
    peak_retention_penalty, simulate_storages, turbine_first_penalty,
)

__all__ = [
    "TERM_NAMES", "EvaluatorConfig", "PenaltyReport", "evaluate", "gate_continuity_penalty",
    "j4_emphasis", "peak_retention_penalty", "simulate_storages", "turbine_first_penalty",
]
