"""
Receding-horizon flood-control controller.

Each hourly step implements the outflow committed at the previous step, forecasts the
inflow, chooses the MPC weights (GA search in PD-MPC modes, a fixed vector for the
baselines), solves the MPC subproblem and commits the schedule's next entry.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.config.settings import (
    DEFAULT_HORIZON, DEFAULT_INITIAL_LEVEL, DEFAULT_INITIAL_SPILL, DEFAULT_INITIAL_TURB,
    DEFAULT_SEED, DEFAULT_SH_LEVELS, FIXED_SH_LEVEL,
)
from src.core.events import Event
from src.core.planner import PlanContext, PlanOutcome, SolverSettings, plan
from src.evaluation.evaluator import EvaluatorConfig, PenaltyReport
from src.forecast.generator import ForecastConfig, generate_forecast
from src.hydro.curve import level_from_storage_clipped, storage_from_level
from src.hydro.reservoir import (
    ReservoirSpec, ReservoirState, ViolationKind, ViolationReport, check_constraints, step_storage,
)
from src.optimization.mpc_builder import Schedule, WeightVector
from src.optimization.weight_search import (
    Chromosome, GAConfig, SHTable, decode, optimize,
)
from src.utils.exceptions import ValidationError

logger = logging.getLogger(__name__)


class ControlMode(Enum):
    """How the MPC weights are chosen at each step"""
    PDMPC = "pdmpc"
    PDMPC_FIXED_SH = "pdmpc-fixed-sh"
    FIXED1 = "fixed1"
    FIXED2 = "fixed2"
    FIXED_CUSTOM = "fixed-custom"

    @property
    def searches(self) -> bool:
        return self in (ControlMode.PDMPC, ControlMode.PDMPC_FIXED_SH)

    @classmethod
    def parse(cls, value: str) -> "ControlMode":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValidationError(
                f"unknown mode {value!r}; expected one of {', '.join(m.value for m in cls)}"
            ) from None


@dataclass(frozen=True)
class FixedWeights:
    """A fixed weight setting: the seven weight genes plus an S_H level (m)."""
    genes: Tuple[int, ...]
    sh_level: float = FIXED_SH_LEVEL

    def __post_init__(self):
        genes = tuple(int(g) for g in self.genes)
        if len(genes) != 7 or any(g < 0 for g in genes):
            raise ValidationError(f"fixed weights need 7 non-negative genes, got {self.genes}")
        object.__setattr__(self, "genes", genes)

    def to_weights(self, spec: ReservoirSpec, sh_table: SHTable, horizon: int,
                   f: Optional[float] = None) -> WeightVector:
        # baseline genes may lie outside the search ranges
        z = decode(Chromosome(self.genes + (0,)), spec, sh_table, horizon, f=f, check_ranges=False)
        return replace(z, s_h=storage_from_level(spec.curve, self.sh_level))


FIXED1 = FixedWeights((3, 1, 3, 3, 20, 20, 15))
FIXED2 = FixedWeights((20, 5, 3, 3, 3, 3, 15))


@dataclass(frozen=True)
class RunConfig:
    """Settings of one receding-horizon run"""
    horizon: int = DEFAULT_HORIZON
    mode: ControlMode = ControlMode.PDMPC
    forecast: ForecastConfig = field(default_factory=ForecastConfig)
    ga: GAConfig = field(default_factory=GAConfig)
    evaluator: Optional[EvaluatorConfig] = None
    initial_level: float = DEFAULT_INITIAL_LEVEL
    initial_turb: float = DEFAULT_INITIAL_TURB
    initial_spill: float = DEFAULT_INITIAL_SPILL
    seed: int = DEFAULT_SEED
    sh_levels: Tuple[float, ...] = DEFAULT_SH_LEVELS
    f: Optional[float] = None
    custom: Optional[FixedWeights] = None
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if self.horizon < 2:
            raise ValidationError("horizon must be >= 2")
        if self.initial_turb < 0 or self.initial_spill < 0:
            raise ValidationError("initial outflows must be >= 0")
        if self.mode == ControlMode.FIXED_CUSTOM and self.custom is None:
            raise ValidationError("mode fixed-custom needs custom weights")
        if self.seed < 0:
            raise ValidationError("seed must be >= 0")

    def evaluator_for(self, spec: ReservoirSpec) -> EvaluatorConfig:
        return self.evaluator if self.evaluator is not None else EvaluatorConfig.from_levels(spec)


@dataclass
class TraceStep:
    """What happened at one step of a run."""
    step: int
    inflow: float
    demand: float
    forecast: np.ndarray
    total: float
    spill: float
    turb: float
    storage_start: float
    storage: float
    level: float
    genes: Tuple[int, ...]
    sh_level: float
    weights: WeightVector
    report: PenaltyReport
    lp_status: str
    fallback: Tuple[str, ...]
    schedule: Schedule
    hist_peak: Optional[float]
    last_spill: float
    ga_generations: int = 0
    ga_evaluations: int = 0
    ga_best_penalty: float = float("nan")
    chromosome: Optional[Chromosome] = None

    @property
    def flagged(self) -> bool:
        return bool(self.fallback)


@dataclass
class Trace:
    event_name: str
    mode: ControlMode
    horizon: int
    seed: int
    initial_storage: float
    steps: List[TraceStep] = field(default_factory=list)
    violations: ViolationReport = field(default_factory=ViolationReport)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def totals(self) -> np.ndarray:
        return np.array([s.total for s in self.steps])

    @property
    def spills(self) -> np.ndarray:
        return np.array([s.spill for s in self.steps])

    @property
    def turbs(self) -> np.ndarray:
        return np.array([s.turb for s in self.steps])

    @property
    def storages(self) -> np.ndarray:
        """End-of-step storages."""
        return np.array([s.storage for s in self.steps])

    @property
    def levels(self) -> np.ndarray:
        return np.array([s.level for s in self.steps])

    @property
    def flagged_steps(self) -> List[int]:
        return [s.step for s in self.steps if s.flagged]

    @property
    def degraded(self) -> bool:
        return any(s.flagged for s in self.steps)


class FloodController:
    """
    Runs one event through the receding-horizon loop.
    """

    def __init__(self, spec: ReservoirSpec, cfg: RunConfig):
        self.spec = spec
        self.cfg = cfg
        self.sh_table = SHTable.from_levels(spec, cfg.sh_levels)
        self.evaluator = cfg.evaluator_for(spec)
        self.ga_cfg = self._ga_config()
        self.fixed = self._fixed_weights()

    def _ga_config(self) -> GAConfig:
        ga = self.cfg.ga
        if self.cfg.mode == ControlMode.PDMPC_FIXED_SH:
            if FIXED_SH_LEVEL not in self.sh_table.levels:
                raise ValidationError(f"S_H table {self.sh_table.levels} has no {FIXED_SH_LEVEL} m entry")
            pinned = dict(ga.fixed_genes)
            pinned["sh"] = self.sh_table.levels.index(FIXED_SH_LEVEL)
            ga = replace(ga, fixed_genes=pinned)
        return ga

    def _fixed_weights(self) -> Optional[FixedWeights]:
        return {
            ControlMode.FIXED1: FIXED1,
            ControlMode.FIXED2: FIXED2,
            ControlMode.FIXED_CUSTOM: self.cfg.custom,
        }.get(self.cfg.mode)

    def run(self, event: Event) -> Trace:
        """
        Run the controller over an event.

        Args:
            event: True hourly inflow (and demand)

        Returns:
            Trace with one TraceStep per event step
        """
        spec, cfg = self.spec, self.cfg
        n_steps = len(event)
        forecast_seq, ga_seq = np.random.SeedSequence(cfg.seed).spawn(2)
        forecast_rng = np.random.default_rng(forecast_seq)
        ga_rng = np.random.default_rng(ga_seq)

        storage = storage_from_level(spec.curve, cfg.initial_level)
        committed_total = cfg.initial_turb + cfg.initial_spill
        committed_spill = cfg.initial_spill
        last_spill = cfg.initial_spill
        prev_schedule = Schedule.constant(-1, committed_total, committed_spill, cfg.horizon)
        warm: Optional[Chromosome] = None
        demand = event.demand_or_zeros
        lws, fws = spec.lws, spec.fws

        trace = Trace(event.name, cfg.mode, cfg.horizon, cfg.seed, initial_storage=storage)
        logger.info(
            f"🚀 Running {cfg.mode.value} on event {event.name!r}: {n_steps} steps, H={cfg.horizon}, seed={cfg.seed}"
        )

        for k in range(n_steps):
            h = min(cfg.horizon, n_steps - k)
            inflow = float(event.inflow[k])
            flags: List[str] = []

            # over-release guard: never let the implemented outflow take storage under LWS
            limit = max((storage - lws) / spec.dt + inflow, 0.0)
            if committed_total > limit:
                excess = committed_total - limit
                logger.warning(
                    f"⚠️ Step {k}: committed outflow {committed_total:.3f} m3/s would empty the reservoir; "
                    f"clamping to {limit:.3f}"
                )
                committed_spill = max(committed_spill - excess, 0.0)
                committed_total = limit
                flags.append("clamped")

            state = ReservoirState(storage, committed_total, committed_spill, last_spill, step_index=k)
            forecast = generate_forecast(cfg.forecast, event.inflow, k, h, forecast_rng)
            hist_peak = float(np.max(event.inflow[:k])) if k > 0 else None
            ctx = PlanContext(
                spec=spec, state=state, forecast=forecast, prev_schedule=prev_schedule,
                hist_peak=hist_peak, evaluator=self.evaluator, demand=demand[k:k + h],
                f=cfg.f, solver=cfg.solver,
            )

            ga_stats = (0, 0, float("nan"))
            chromosome = None
            if cfg.mode.searches:
                ga_seed = int(ga_rng.integers(0, 2 ** 63 - 1))
                chromosome, outcome, ga_stats = self._search(ctx, h, warm, ga_seed)
                warm = chromosome
                genes = chromosome.genes[:-1]
                sh_level = self.sh_table.levels[chromosome["sh"]]
                z = decode(chromosome, spec, self.sh_table, h, f=cfg.f)
            else:
                z = self.fixed.to_weights(spec, self.sh_table, h, f=cfg.f)
                outcome = plan(ctx, z)
                genes, sh_level = self.fixed.genes, self.fixed.sh_level

            if outcome.fallback:
                logger.warning(f"⚠️ Step {k}: LP {outcome.lp_status}, fallback {'|'.join(outcome.fallback)}")
            flags = list(outcome.fallback) + flags

            new_storage = step_storage(storage, inflow, committed_total, spec.dt)
            if new_storage > fws:
                logger.warning(f"⚠️ Step {k}: storage {new_storage:.6g} m3 above FWS {fws:.6g} m3")
                flags.append("overtopped")

            trace.steps.append(TraceStep(
                step=k,
                inflow=inflow,
                demand=float(demand[k]),
                forecast=forecast,
                total=committed_total,
                spill=committed_spill,
                turb=committed_total - committed_spill,
                storage_start=storage,
                storage=new_storage,
                level=level_from_storage_clipped(spec.curve, new_storage),
                genes=tuple(genes),
                sh_level=sh_level,
                weights=z,
                report=outcome.report,
                lp_status=outcome.lp_status,
                fallback=tuple(flags),
                schedule=outcome.schedule,
                hist_peak=hist_peak,
                last_spill=last_spill,
                ga_generations=ga_stats[0],
                ga_evaluations=ga_stats[1],
                ga_best_penalty=ga_stats[2],
                chromosome=chromosome,
            ))
            logger.debug(
                f"Step {k}: inflow {inflow:.2f}, outflow {committed_total:.2f} (spill {committed_spill:.2f}), "
                f"level {trace.steps[-1].level:.3f} m, penalty {outcome.report.total:.6g}"
            )

            schedule = outcome.schedule
            last_spill = committed_spill
            if schedule.horizon > 1:
                committed_total = float(schedule.totals[1])
                committed_spill = float(schedule.spills[1])
            prev_schedule = schedule
            storage = new_storage

        trace.violations = check_constraints(
            spec, trace.totals, trace.spills, np.concatenate([[trace.initial_storage], trace.storages]), demand,
        )
        for kind in ViolationKind:
            hits = trace.violations.of_kind(kind)
            if hits:
                logger.warning(f"⚠️ {len(hits)} committed steps break {kind.value}, first at step {hits[0].step}")

        logger.info(
            f"✅ Finished {cfg.mode.value} on {event.name!r}: peak outflow {trace.totals.max():.2f} m3/s, "
            f"{len(trace.flagged_steps)} flagged steps"
        )
        return trace

    def _search(self, ctx: PlanContext, h: int, warm: Optional[Chromosome],
                ga_seed: int) -> Tuple[Chromosome, PlanOutcome, Tuple[int, int, float]]:
        """GA over the weights for one step; returns the best chromosome and its plan."""
        memo: Dict[Chromosome, PlanOutcome] = {}

        def fitness(ch: Chromosome) -> float:
            outcome = plan(ctx, decode(ch, self.spec, self.sh_table, h, f=self.cfg.f))
            memo[ch] = outcome
            return outcome.report.total

        if h == 1:
            # first entry is locked, so every weight vector yields the same one-step schedule
            ch = self.ga_cfg.pin(warm) if warm is not None else self._default_chromosome()
            penalty = fitness(ch)
            return ch, memo[ch], (0, 1, penalty)

        result = optimize(fitness, warm, replace(self.ga_cfg, seed=ga_seed))
        best = result.best
        outcome = memo.get(best)
        if outcome is None:
            outcome = plan(ctx, decode(best, self.spec, self.sh_table, h, f=self.cfg.f))
        return best, outcome, (result.generations, result.evaluations, result.best_penalty)

    def _default_chromosome(self) -> Chromosome:
        sh = self.sh_table.levels.index(FIXED_SH_LEVEL) if FIXED_SH_LEVEL in self.sh_table.levels else 1
        return self.ga_cfg.pin(Chromosome((3, 1, 3, 3, 10, 10, 15, sh)))


def run_event(event: Event, spec: ReservoirSpec, cfg: RunConfig) -> Trace:
    """Run one event with one configuration."""
    return FloodController(spec, cfg).run(event)
