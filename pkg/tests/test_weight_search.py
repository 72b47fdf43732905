"""
Tests for chromosome decoding and the integer genetic algorithm.
"""

import pytest

from src.hydro.curve import storage_from_level
from src.optimization.weight_search import (
    GENE_NAMES, GENE_RANGES, Chromosome, GAConfig, SHTable, decode, gene_index, optimize,
)
from src.utils.exceptions import GeneOutOfRangeError, NumericalFailure, ValidationError

TARGET = Chromosome((7, 1, 12, 4, 9, 15, 11, 2))


def distance_to_target(ch: Chromosome) -> float:
    return float(sum(abs(a - b) for a, b in zip(ch.genes, TARGET.genes)))


@pytest.fixture
def sh_table(spec):
    return SHTable.from_levels(spec)


class TestDecode:
    def test_flow_weight_scaling(self, spec, sh_table):
        z = decode(Chromosome((3, 1, 3, 3, 10, 10, 15, 1)), spec, sh_table, 6)
        assert z.w1 == pytest.approx(3 * 20 / 11680)
        assert z.w1 == pytest.approx(5.137e-3, rel=1e-3)
        assert z.w2 == pytest.approx(1 * 2 / 11680)
        assert z.w4_d == pytest.approx(10 * 20 / 11680)

    def test_storage_weights_keep_ratio(self, spec, sh_table):
        z = decode(Chromosome((3, 1, 3, 3, 10, 10, 15, 1)), spec, sh_table, 6)
        assert z.w5_2 / z.w5_1 == pytest.approx(2.0)
        assert z.w5_3 / z.w5_1 == pytest.approx(20.0)
        assert z.w5_1 == pytest.approx(15 * 20 / (spec.fws * 6))

    def test_f_overrides_horizon(self, spec, sh_table):
        a = decode(Chromosome((3, 1, 3, 3, 10, 10, 15, 1)), spec, sh_table, 6, f=12)
        b = decode(Chromosome((3, 1, 3, 3, 10, 10, 15, 1)), spec, sh_table, 12)
        assert a == b

    def test_sh_gene_picks_level(self, spec, sh_table):
        z = decode(Chromosome((0, 0, 0, 0, 0, 0, 1, 1)), spec, sh_table, 6)
        assert z.s_h == pytest.approx(storage_from_level(spec.curve, 79.0))

    def test_out_of_range_gene(self, spec, sh_table):
        with pytest.raises(GeneOutOfRangeError, match="w2"):
            decode(Chromosome((0, 3, 0, 0, 0, 0, 1, 1)), spec, sh_table, 6)

    def test_unchecked_decode_allows_baseline_genes(self, spec, sh_table):
        z = decode(Chromosome((20, 5, 3, 3, 3, 3, 15, 1)), spec, sh_table, 6, check_ranges=False)
        assert z.w1 == pytest.approx(20 * 20 / 11680)

    def test_sh_table_shape(self, spec):
        with pytest.raises(ValidationError):
            SHTable.from_levels(spec, (78.0, 79.0))
        with pytest.raises(ValidationError):
            SHTable.from_levels(spec, (79.0, 78.5, 79.5))
        with pytest.raises(ValidationError):
            SHTable.from_levels(spec, (78.5, 79.0, 80.0))


class TestChromosome:
    def test_named_access(self):
        ch = Chromosome((1, 2, 3, 4, 5, 6, 7, 0))
        assert ch["w4i"] == 5
        assert ch.replace("w5", 20)["w5"] == 20
        assert ch.as_dict()["sh"] == 0
        assert str(ch) == "(1,2,3,4,5,6,7,0)"

    def test_wrong_gene_count(self):
        with pytest.raises(ValidationError):
            Chromosome((1, 2, 3))

    def test_unknown_gene(self):
        with pytest.raises(ValidationError):
            gene_index("w9")

    def test_ranges_cover_every_gene(self):
        assert len(GENE_RANGES) == len(GENE_NAMES) == 8


class TestGAConfig:
    def test_elitism_below_population(self):
        with pytest.raises(ValidationError):
            GAConfig(population=4, elitism=4)

    def test_fixed_gene_in_range(self):
        with pytest.raises(GeneOutOfRangeError):
            GAConfig(fixed_genes={"sh": 3})

    def test_negative_stall_rejected(self):
        with pytest.raises(ValidationError):
            GAConfig(stall_generations=-1)

    def test_pin(self):
        cfg = GAConfig(fixed_genes={"sh": 1, "w2": 0})
        pinned = cfg.pin(Chromosome((1, 2, 3, 4, 5, 6, 7, 0)))
        assert pinned["sh"] == 1 and pinned["w2"] == 0


class TestOptimize:
    """Search behaviour on cheap synthetic fitness functions."""

    def test_constant_fitness(self):
        result = optimize(lambda ch: 4.5, None, GAConfig(population=8, generations=3, seed=1))
        assert result.best_penalty == 4.5
        assert result.best.in_range()

    def test_stops_after_stalled_generations(self):
        result = optimize(lambda ch: 4.5, None, GAConfig(population=8, generations=20, stall_generations=3, seed=1))
        assert result.generations == len(result.history) == 4

    def test_stall_zero_runs_every_generation(self):
        result = optimize(lambda ch: 4.5, None, GAConfig(population=8, generations=6, stall_generations=0, seed=1))
        assert result.generations == 6

    def test_warm_start_dominance(self):
        warm = Chromosome((5, 0, 10, 4, 9, 13, 11, 2))
        result = optimize(distance_to_target, warm, GAConfig(population=24, generations=30, seed=3))
        assert result.best_penalty <= distance_to_target(warm)

    def test_incumbent_never_worsens(self):
        cfg = GAConfig(population=12, generations=15, stall_generations=0, seed=9)
        result = optimize(distance_to_target, None, cfg)
        assert len(result.history) == 15
        assert all(b <= a for a, b in zip(result.history, result.history[1:]))
        assert result.history[-1] == result.best_penalty

    def test_every_candidate_in_range(self):
        seen = []

        def fitness(ch):
            seen.append(ch)
            return distance_to_target(ch)

        optimize(fitness, None, GAConfig(population=16, generations=10, mutation_prob=0.5, seed=4))
        assert seen
        assert all(ch.in_range() for ch in seen)

    def test_single_gene_oracle(self):
        others = {"w2": 1, "w3i": 3, "w3d": 3, "w4i": 10, "w4d": 10, "w5": 15, "sh": 1}
        cfg = GAConfig(population=40, generations=60, stall_generations=0, seed=11, fixed_genes=others)
        result = optimize(lambda ch: abs(ch["w1"] - 7), None, cfg)
        assert result.best["w1"] == 7
        assert result.best_penalty == 0
        assert all(result.best[name] == value for name, value in others.items())

    def test_failing_fitness_scores_infinite(self):
        def fitness(ch):
            if ch["w1"] % 2:
                raise NumericalFailure("iteration guard")
            return distance_to_target(ch)

        result = optimize(fitness, None, GAConfig(population=12, generations=8, seed=2))
        assert result.best["w1"] % 2 == 0
        assert result.best_penalty < float("inf")

    def test_same_seed_same_result(self):
        cfg = GAConfig(population=10, generations=6, seed=21)
        a = optimize(distance_to_target, None, cfg)
        b = optimize(distance_to_target, None, cfg)
        assert a.best == b.best
        assert a.history == b.history
        assert a.evaluations == b.evaluations

    def test_threaded_matches_serial(self):
        serial = optimize(distance_to_target, None, GAConfig(population=10, generations=6, seed=21))
        threaded = optimize(distance_to_target, None, GAConfig(population=10, generations=6, seed=21, workers=4))
        assert serial.best == threaded.best
        assert serial.best_penalty == threaded.best_penalty

    def test_invalid_warm_start(self):
        with pytest.raises(GeneOutOfRangeError):
            optimize(distance_to_target, Chromosome((0, 9, 0, 0, 0, 0, 1, 0)), GAConfig(population=4, seed=0))
