"""
Integer-coded genetic algorithm over the 8-gene weight/parameter chromosome.

Each gene is a small integer; decode() scales the genes into an MPC WeightVector with
fixed normalising multipliers and picks s_h from a three-entry table of levels.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.config.settings import (
    DEFAULT_GA_CROSSOVER_PROB, DEFAULT_GA_ELITISM, DEFAULT_GA_GENERATIONS,
    DEFAULT_GA_MUTATION_PROB, DEFAULT_GA_POPULATION, DEFAULT_GA_STALL_GENERATIONS, DEFAULT_GA_TOURNAMENT_SIZE,
    DEFAULT_SEED, DEFAULT_SH_LEVELS, WORKER_THREADS,
)
from src.hydro.curve import storage_from_level
from src.hydro.reservoir import ReservoirSpec
from src.optimization.mpc_builder import WeightVector
from src.utils.exceptions import GeneOutOfRangeError, ReservoirControlError, ValidationError

logger = logging.getLogger(__name__)

GENE_NAMES = ("w1", "w2", "w3i", "w3d", "w4i", "w4d", "w5", "sh")
GENE_RANGES = ((0, 19), (0, 2), (0, 19), (0, 19), (0, 19), (0, 19), (1, 20), (0, 2))

# Normalising multipliers: flow weights over MO_spill, storage weights over FWS * f
FLOW_MULTIPLIERS = {"w1": 20.0, "w2": 2.0, "w3i": 20.0, "w3d": 20.0, "w4i": 20.0, "w4d": 20.0}
STORAGE_MULTIPLIERS = (20.0, 40.0, 400.0)


@dataclass(frozen=True)
class Chromosome:
    genes: Tuple[int, ...]

    def __post_init__(self):
        genes = tuple(int(g) for g in self.genes)
        if len(genes) != len(GENE_NAMES):
            raise ValidationError(f"chromosome needs {len(GENE_NAMES)} genes, got {len(genes)}")
        object.__setattr__(self, "genes", genes)

    def __getitem__(self, name: str) -> int:
        return self.genes[GENE_NAMES.index(name)]

    def replace(self, name: str, value: int) -> "Chromosome":
        genes = list(self.genes)
        genes[gene_index(name)] = int(value)
        return Chromosome(tuple(genes))

    def in_range(self) -> bool:
        return all(lo <= g <= hi for g, (lo, hi) in zip(self.genes, GENE_RANGES))

    def validate(self):
        for name, g, (lo, hi) in zip(GENE_NAMES, self.genes, GENE_RANGES):
            if not lo <= g <= hi:
                raise GeneOutOfRangeError(f"gene {name}={g} outside [{lo}, {hi}]")

    def as_dict(self) -> Dict[str, int]:
        return dict(zip(GENE_NAMES, self.genes))

    def __str__(self):
        return "(" + ",".join(str(g) for g in self.genes) + ")"


def gene_index(name: str) -> int:
    if name not in GENE_NAMES:
        raise ValidationError(f"unknown gene {name!r}; expected one of {', '.join(GENE_NAMES)}")
    return GENE_NAMES.index(name)


@dataclass(frozen=True)
class SHTable:
    """Candidate highest-allowed levels and their storages."""
    levels: Tuple[float, ...]
    storages: Tuple[float, ...]

    @classmethod
    def from_levels(cls, spec: ReservoirSpec, levels: Sequence[float] = DEFAULT_SH_LEVELS) -> "SHTable":
        levels = tuple(float(h) for h in levels)
        if len(levels) != GENE_RANGES[-1][1] + 1:
            raise ValidationError(f"S_H table needs {GENE_RANGES[-1][1] + 1} levels, got {len(levels)}")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValidationError("S_H levels must be strictly increasing")
        if levels[-1] >= spec.fwl:
            raise ValidationError(f"S_H levels must stay below FWL {spec.fwl}")
        return cls(levels=levels, storages=tuple(storage_from_level(spec.curve, h) for h in levels))

    def __getitem__(self, index: int) -> float:
        return self.storages[index]

    def __len__(self):
        return len(self.levels)


def decode(ch: Chromosome, spec: ReservoirSpec, sh_table: SHTable, horizon: int,
           f: Optional[float] = None, check_ranges: bool = True) -> WeightVector:
    """
    Turn genes into MPC weights.

    Args:
        ch: Chromosome to decode
        spec: Reservoir specification (MO_spill and FWS normalisers)
        sh_table: Highest-allowed storage candidates indexed by the sh gene
        horizon: Horizon length, the default for f
        f: Storage-weight normaliser; None means the horizon length
        check_ranges: Reject genes outside the search ranges (baselines skip this)

    Returns:
        Decoded weight vector
    """
    if check_ranges:
        ch.validate()
    f = float(horizon if f is None else f)
    if f <= 0:
        raise ValidationError("f must be positive")
    flow = {name: ch[name] * m / spec.mo_spill for name, m in FLOW_MULTIPLIERS.items()}
    storage_norm = spec.fws * f
    w5 = [ch["w5"] * m / storage_norm for m in STORAGE_MULTIPLIERS]
    sh = ch["sh"]
    if not 0 <= sh < len(sh_table):
        raise GeneOutOfRangeError(f"gene sh={sh} has no S_H table entry")
    return WeightVector(
        w1=flow["w1"], w2=flow["w2"], w3_i=flow["w3i"], w3_d=flow["w3d"],
        w4_i=flow["w4i"], w4_d=flow["w4d"],
        w5_1=w5[0], w5_2=w5[1], w5_3=w5[2],
        s_h=sh_table[sh],
    )


@dataclass(frozen=True)
class GAConfig:
    """Genetic algorithm hyperparameters"""
    population: int = DEFAULT_GA_POPULATION
    generations: int = DEFAULT_GA_GENERATIONS
    tournament_size: int = DEFAULT_GA_TOURNAMENT_SIZE
    crossover_prob: float = DEFAULT_GA_CROSSOVER_PROB
    mutation_prob: float = DEFAULT_GA_MUTATION_PROB
    elitism: int = DEFAULT_GA_ELITISM
    stall_generations: int = DEFAULT_GA_STALL_GENERATIONS
    seed: int = DEFAULT_SEED
    fixed_genes: Mapping[str, int] = field(default_factory=dict)
    workers: int = WORKER_THREADS

    def __post_init__(self):
        if self.population < 4:
            raise ValidationError("population must be >= 4")
        if not 0 <= self.elitism < self.population:
            raise ValidationError("elitism must be in [0, population)")
        if self.generations < 1:
            raise ValidationError("generations must be >= 1")
        if not 1 <= self.tournament_size <= self.population:
            raise ValidationError("tournament_size must be in [1, population]")
        if not (0 <= self.crossover_prob <= 1 and 0 <= self.mutation_prob <= 1):
            raise ValidationError("crossover_prob and mutation_prob must lie in [0, 1]")
        if self.stall_generations < 0:
            raise ValidationError("stall_generations must be >= 0")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        for name, value in self.fixed_genes.items():
            lo, hi = GENE_RANGES[gene_index(name)]
            if not lo <= value <= hi:
                raise GeneOutOfRangeError(f"fixed gene {name}={value} outside [{lo}, {hi}]")

    def pin(self, ch: Chromosome) -> Chromosome:
        """Force the fixed genes onto a chromosome."""
        for name, value in self.fixed_genes.items():
            if ch[name] != value:
                ch = ch.replace(name, value)
        return ch


@dataclass
class SearchResult:
    best: Chromosome
    best_penalty: float
    evaluations: int
    generations: int
    history: List[float] = field(default_factory=list)


class _Evaluator:
    """Fitness cache; each distinct chromosome is scored once, in submission order."""

    def __init__(self, fitness: Callable[[Chromosome], float], pool: Optional[ThreadPoolExecutor]):
        self.fitness = fitness
        self.pool = pool
        self.cache: Dict[Chromosome, float] = {}
        self.best: Optional[Chromosome] = None
        self.best_penalty = float("inf")

    def _safe(self, ch: Chromosome) -> float:
        try:
            return float(self.fitness(ch))
        except (ReservoirControlError, ArithmeticError, ValueError) as e:
            logger.warning(f"⚠️ Fitness failed for {ch}: {e}; scoring as +inf")
            return float("inf")

    def score(self, population: Iterable[Chromosome]) -> List[float]:
        population = list(population)
        fresh = []
        for ch in population:
            if ch not in self.cache and ch not in fresh:
                fresh.append(ch)
        if self.pool is not None and len(fresh) > 1:
            results = list(self.pool.map(self._safe, fresh))
        else:
            results = [self._safe(ch) for ch in fresh]
        for ch, penalty in zip(fresh, results):
            self.cache[ch] = penalty
            if self.best is None or penalty < self.best_penalty:
                self.best, self.best_penalty = ch, penalty
        return [self.cache[ch] for ch in population]


def _random_chromosome(rng: np.random.Generator) -> Chromosome:
    return Chromosome(tuple(int(rng.integers(lo, hi + 1)) for lo, hi in GENE_RANGES))


def _tournament(rng: np.random.Generator, penalties: Sequence[float], size: int) -> int:
    entrants = rng.choice(len(penalties), size=size, replace=False)
    return int(min(entrants, key=lambda i: (penalties[i], i)))


def _mutate(rng: np.random.Generator, genes: List[int], prob: float) -> List[int]:
    for i, (lo, hi) in enumerate(GENE_RANGES):
        if rng.random() < prob:
            genes[i] = int(rng.integers(lo, hi + 1))
    return genes


def optimize(fitness: Callable[[Chromosome], float], warm_start: Optional[Chromosome],
             cfg: GAConfig) -> SearchResult:
    """
    Minimise a penalty over chromosomes.

    Args:
        fitness: Penalty of a chromosome; errors count as +inf
        warm_start: Previous optimum, injected into generation 0
        cfg: Hyperparameters and seed

    Returns:
        SearchResult with the best chromosome ever evaluated
    """
    rng = np.random.default_rng(cfg.seed)
    n_genes = len(GENE_NAMES)

    population: List[Chromosome] = []
    if warm_start is not None:
        warm_start.validate()
        population.append(cfg.pin(warm_start))
    while len(population) < cfg.population:
        population.append(cfg.pin(_random_chromosome(rng)))

    pool = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    try:
        evaluator = _Evaluator(fitness, pool)
        penalties = evaluator.score(population)
        history = [evaluator.best_penalty]
        stall = 0

        for _ in range(1, cfg.generations):
            if cfg.stall_generations and stall >= cfg.stall_generations:
                break
            ranked = sorted(range(len(population)), key=lambda i: (penalties[i], population[i].genes))
            offspring = [population[i] for i in ranked[:cfg.elitism]]
            while len(offspring) < cfg.population:
                p1 = population[_tournament(rng, penalties, cfg.tournament_size)].genes
                p2 = population[_tournament(rng, penalties, cfg.tournament_size)].genes
                if rng.random() < cfg.crossover_prob:
                    point = int(rng.integers(1, n_genes))
                    c1, c2 = list(p1[:point] + p2[point:]), list(p2[:point] + p1[point:])
                else:
                    c1, c2 = list(p1), list(p2)
                for child in (c1, c2):
                    if len(offspring) < cfg.population:
                        offspring.append(cfg.pin(Chromosome(tuple(_mutate(rng, child, cfg.mutation_prob)))))
            population = offspring
            penalties = evaluator.score(population)
            stall = stall + 1 if evaluator.best_penalty >= history[-1] else 0
            history.append(evaluator.best_penalty)
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    logger.debug(
        f"GA finished: best {evaluator.best} penalty {evaluator.best_penalty:.6g}, "
        f"{len(evaluator.cache)} evaluations in {len(history)} generations"
    )
    return SearchResult(
        best=evaluator.best,
        best_penalty=evaluator.best_penalty,
        evaluations=len(evaluator.cache),
        generations=len(history),
        history=history,
    )
