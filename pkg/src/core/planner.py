"""
One planning call: build the MPC LP for a weight vector, solve it, fall back when the
hard problem fails, and score the resulting schedule with the evaluator.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from src.config.settings import DEFAULT_FEAS_TOL, DEFAULT_FWS_SOFT_PENALTY, DEFAULT_OPT_TOL
from src.evaluation.evaluator import EvaluatorConfig, PenaltyReport, evaluate
from src.hydro.reservoir import ReservoirSpec, ReservoirState
from src.optimization.linprog import LPStatus, solve
from src.optimization.mpc_builder import Schedule, WeightVector, build, extract_schedule
from src.utils.exceptions import NumericalFailure, StateOutOfRangeError

logger = logging.getLogger(__name__)

NUMERICAL_FAILURE = "numerical_failure"
STATE_OUT_OF_RANGE = "state_out_of_range"


@dataclass(frozen=True)
class SolverSettings:
    feas_tol: float = DEFAULT_FEAS_TOL
    opt_tol: float = DEFAULT_OPT_TOL
    soft_penalty: float = DEFAULT_FWS_SOFT_PENALTY


@dataclass(frozen=True)
class PlanContext:
    """Everything about a step except the weight vector."""
    spec: ReservoirSpec
    state: ReservoirState
    forecast: np.ndarray
    prev_schedule: Schedule
    hist_peak: Optional[float]
    evaluator: EvaluatorConfig
    demand: Optional[np.ndarray] = None
    f: Optional[float] = None
    solver: SolverSettings = field(default_factory=SolverSettings)


@dataclass(frozen=True)
class PlanOutcome:
    schedule: Schedule
    report: PenaltyReport
    lp_status: str
    fallback: Tuple[str, ...] = ()
    objective: float = float("nan")


def _attempt(ctx: PlanContext, z: WeightVector, softened: bool):
    lp, var_map = build(
        ctx.spec, ctx.state, ctx.forecast, ctx.prev_schedule, z,
        ctx.evaluator.s_u, ctx.evaluator.s_l, ctx.demand,
        softened=softened, soft_penalty=ctx.solver.soft_penalty,
    )
    sol = solve(lp, feas_tol=ctx.solver.feas_tol, opt_tol=ctx.solver.opt_tol)
    return sol, var_map


def plan(ctx: PlanContext, z: WeightVector) -> PlanOutcome:
    """
    Solve the MPC subproblem for one weight vector and score its schedule.

    The hard problem is tried first; on infeasibility, numerical failure or a state
    outside the curve the storage bounds are softened, and if that fails as well the
    committed outflow is held for the whole horizon.

    Args:
        ctx: Step context
        z: Candidate weight vector

    Returns:
        PlanOutcome with the schedule, its penalty report and fallback flags
    """
    k = ctx.state.step_index
    schedule = None
    objective = float("nan")
    fallback = []

    try:
        sol, var_map = _attempt(ctx, z, softened=False)
        lp_status = sol.status.value
        if sol.status == LPStatus.OPTIMAL:
            schedule = extract_schedule(sol, var_map, k)
            objective = sol.objective_value
    except NumericalFailure as e:
        logger.debug(f"Step {k}: LP numerical failure ({e})")
        lp_status = NUMERICAL_FAILURE
    except StateOutOfRangeError as e:
        logger.debug(f"Step {k}: {e}")
        lp_status = STATE_OUT_OF_RANGE

    if schedule is None:
        fallback.append("softened")
        logger.debug(f"Step {k}: hard LP {lp_status}, retrying with softened storage bounds")
        try:
            sol, var_map = _attempt(ctx, z, softened=True)
            if sol.status == LPStatus.OPTIMAL:
                schedule = extract_schedule(sol, var_map, k)
                objective = sol.objective_value
            else:
                logger.debug(f"Step {k}: softened LP {sol.status.value}")
        except NumericalFailure as e:
            logger.debug(f"Step {k}: softened LP numerical failure ({e})")

    if schedule is None:
        fallback.append("held")
        logger.debug(f"Step {k}: holding committed outflow {ctx.state.committed_total_outflow:.3f} m3/s")
        schedule = Schedule.constant(
            k, ctx.state.committed_total_outflow, ctx.state.committed_spill_outflow, len(ctx.forecast),
        )

    report = evaluate(
        schedule, ctx.prev_schedule, ctx.state, ctx.forecast, ctx.hist_peak,
        ctx.spec, z.s_h, ctx.evaluator, f=ctx.f,
    )
    return PlanOutcome(schedule=schedule, report=report, lp_status=lp_status,
                       fallback=tuple(fallback), objective=objective)


def score(ctx: PlanContext, z: WeightVector) -> float:
    """Evaluator penalty of the schedule planned with z."""
    return plan(ctx, z).report.total
