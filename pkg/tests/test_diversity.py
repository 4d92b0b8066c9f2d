import numpy as np
import pytest

from brkga import (
    BrkgaConfig,
    FunctionDecoder,
    Individual,
    InvalidArgumentError,
    Population,
    RngStream,
    elite_diversity_filter,
    init_population,
    migrate,
    population_diversity,
    reset_population,
    shake,
)
from brkga.diversity import replace_worst_elite, shake_keys

sum_decoder = FunctionDecoder(lambda x: float(x.sum()), n=10)


def pop_of(keys_and_fit, p_e=1, p_m=1):
    members = [Individual(np.asarray(k, dtype=float), (float(f),)) for k, f in keys_and_fit]
    return Population.from_members(members, p_e, p_m)


class TestReset:
    def setup_method(self):
        self.config = BrkgaConfig(n=10, p=12, p_e=3, p_m=2)

    def test_fresh_population(self):
        old = init_population(self.config, sum_decoder, (), RngStream(1))
        new = reset_population(self.config, sum_decoder, RngStream(2))
        assert new.size == 12
        old_elite = {m.keys.tobytes() for m in old.elite}
        assert not any(m.keys.tobytes() in old_elite for m in new)

    def test_replay(self):
        a = reset_population(self.config, sum_decoder, RngStream(2))
        b = reset_population(self.config, sum_decoder, RngStream(2))
        assert [m.keys.tobytes() for m in a] == [m.keys.tobytes() for m in b]


class TestShake:
    def setup_method(self):
        self.config = BrkgaConfig(n=10, p=12, p_e=3, p_m=2)
        self.pop = init_population(self.config, sum_decoder, (), RngStream(1))

    def test_beta_zero(self):
        out = shake(self.pop, 0.0, self.config, sum_decoder, RngStream(3))
        before = {m.keys.tobytes() for m in self.pop}
        elite = {m.keys.tobytes() for m in self.pop.elite}
        kept = [m for m in out if m.keys.tobytes() in before]
        assert {m.keys.tobytes() for m in kept} == elite
        assert out.size == self.pop.size

    def test_move_count(self, monkeypatch):
        import brkga.diversity as div

        seen = []
        real = div.shake_keys

        def spy(keys, moves, n, rng):
            seen.append(moves)
            return real(keys, moves, n, rng)

        monkeypatch.setattr(div, "shake_keys", spy)
        out = shake(self.pop, 0.3, self.config, sum_decoder, RngStream(3))
        assert seen == [3] * self.config.p_e
        assert out.size == self.pop.size
        elite = {m.keys.tobytes() for m in self.pop.elite}
        others = {m.keys.tobytes() for m in self.pop.non_elite}
        assert not any(m.keys.tobytes() in others for m in out if m.keys.tobytes() not in elite)

    def test_touched_positions_bound(self):
        for s in range(50):
            keys = np.arange(10) / 10
            out, touched = shake_keys(keys, 3, 10, RngStream(s))
            assert len(touched) <= 6
            changed = set(np.flatnonzero(out != keys).tolist())
            assert changed <= touched

    def test_invalid_beta(self):
        with pytest.raises(InvalidArgumentError):
            shake(self.pop, 1.5, self.config, sum_decoder, RngStream(3))


class TestMigrate:
    def test_single_island_noop(self):
        pop = pop_of([(np.full(2, 0.1 * i), i) for i in range(5)])
        assert migrate([pop], 1)[0] is pop

    def test_zero_count_noop(self):
        a = pop_of([(np.full(2, 0.1 * i), i) for i in range(5)])
        b = pop_of([(np.full(2, 0.1 * i + 0.05), i + 10) for i in range(5)])
        out = migrate([a, b], 0)
        assert out[0] is a and out[1] is b

    def test_best_travels(self):
        a = pop_of([(np.full(2, 0.1 * i), i) for i in range(5)])
        b = pop_of([(np.full(2, 0.1 * i + 0.05), i + 10) for i in range(5)])
        a2, b2 = migrate([a, b], 1)
        assert b2.best.fitness == (0.0,)
        assert b2.size == 5
        assert 14.0 not in b2.fitness_values()  # worst of B replaced
        assert a2.best.fitness == (0.0,)

    def test_count_exceeds_elite(self):
        a = pop_of([(np.full(2, 0.1 * i), i) for i in range(5)])
        with pytest.raises(InvalidArgumentError):
            migrate([a, a], 2)


class TestEliteFilter:
    def members(self, keys):
        return [Individual(np.asarray(k, dtype=float), (float(i),)) for i, k in enumerate(keys)]

    def test_zero_distance_is_plain_partition(self):
        m = self.members([[0.1], [0.2], [0.3], [0.4]])
        assert elite_diversity_filter(m, 0, elite_size=2) == m[:2]

    def test_duplicate_skipped(self):
        m = self.members([[0.1, 0.1], [0.1, 0.1], [0.9, 0.9], [0.5, 0.5]])
        out = elite_diversity_filter(m, 0.1, elite_size=2)
        assert out == [m[0], m[2]]

    def test_shortfall_filled_by_best_skipped(self):
        # Only the pair (0, 2) is far apart; member 1 fills the third slot.
        m = self.members([[0.1], [0.12], [0.9]])
        out = elite_diversity_filter(m, 0.5, elite_size=3)
        assert out == m


class TestDiversityMetric:
    def test_identical(self):
        assert population_diversity([np.full(4, 0.3)] * 5) == 0

    def test_two_extremes(self):
        eps = 1e-9
        assert population_diversity([np.zeros(2), np.full(2, 1 - eps)]) == pytest.approx(1 - eps)

    def test_too_small(self):
        with pytest.raises(InvalidArgumentError):
            population_diversity([np.zeros(2)])

    def test_large_path_matches_small(self):
        x = np.random.default_rng(0).random((300, 60))
        pairs = 300 * 299 / 2
        brute = sum(np.abs(x[i] - x[j]).mean() for i in range(0, 300, 1) for j in range(i + 1, 300)) / pairs
        assert population_diversity(list(x)) == pytest.approx(brute)


def test_replace_worst_elite():
    pop = pop_of([(np.full(2, 0.1 * i), i) for i in range(6)], p_e=2, p_m=1)
    better = Individual(np.full(2, 0.95), (0.5,))
    out, replaced = replace_worst_elite(pop, better)
    assert replaced and out.fitness_values()[:2].tolist() == [0.0, 0.5]
    worse = Individual(np.full(2, 0.97), (9.0,))
    out2, replaced2 = replace_worst_elite(pop, worse)
    assert not replaced2 and out2 is pop
