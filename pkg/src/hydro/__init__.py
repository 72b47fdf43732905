"""
Hydro core: stage-storage curve, reservoir mass balance and constraint checks
"""

from .curve import StageStorageCurve, level_from_storage, storage_from_level, level_from_storage_clipped
from .reservoir import (
    ReservoirSpec, ReservoirState, ViolationKind, ViolationReport, check_constraints, step_storage,
)

__all__ = [
    'StageStorageCurve',
    'level_from_storage',
    'storage_from_level',
    'level_from_storage_clipped',
    'ReservoirSpec',
    'ReservoirState',
    'ViolationKind',
    'ViolationReport',
    'check_constraints',
    'step_storage',
]
