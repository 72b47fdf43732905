"""
Optimization layer: dense LP solver, MPC subproblem builder and the weight-search GA.
"""

from .linprog import LPSolution, LPStatus, StandardFormLP, dump_lp, solve
from .mpc_builder import (
    Schedule, TargetLevels, VarMap, WeightVector, build, extract_schedule, extract_storages, time_weights,
)
from .weight_search import (
    GENE_NAMES, GENE_RANGES, Chromosome, GAConfig, SearchResult, SHTable, decode, optimize,
)

__all__ = [
    "LPSolution", "LPStatus", "StandardFormLP", "dump_lp", "solve",
    "Schedule", "TargetLevels", "VarMap", "WeightVector", "build", "extract_schedule",
    "extract_storages", "time_weights",
    "GENE_NAMES", "GENE_RANGES", "Chromosome", "GAConfig", "SearchResult", "SHTable", "decode", "optimize",
]
