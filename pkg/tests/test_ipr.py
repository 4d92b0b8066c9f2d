import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from brkga import (
    FunctionDecoder,
    Individual,
    InvalidArgumentError,
    KnapsackDecoder,
    KnapsackInstance,
    NotApplicableError,
    Population,
    RngStream,
    TspDecoder,
    TspInstance,
    hamming_theta_distance,
    ipr,
    kendall_tau_distance,
    pick_ipr_pair,
)
from brkga.core import evaluate

from oracles import random_tsp_matrix

pair_strategy = st.integers(2, 9).flatmap(
    lambda n: st.tuples(
        arrays(np.float64, n, elements=st.floats(0, 1, exclude_max=True), unique=True),
        arrays(np.float64, n, elements=st.floats(0, 1, exclude_max=True), unique=True),
    )
)


def brute_kendall(a, b):
    return sum((a[i] < a[j]) != (b[i] < b[j]) for i, j in itertools.combinations(range(len(a)), 2))


class TestDistances:
    def test_hamming_examples(self):
        assert hamming_theta_distance([0.3, 0.7], [0.3, 0.7]) == 0
        assert hamming_theta_distance([0.1, 0.9], [0.9, 0.1]) == 2
        assert hamming_theta_distance([0.1, 0.2], [0.3, 0.4]) == 0

    def test_kendall_examples(self):
        assert kendall_tau_distance([0.1, 0.2, 0.3], [0.1, 0.2, 0.3]) == 0
        assert kendall_tau_distance([0.1, 0.2, 0.3], [0.3, 0.2, 0.1]) == 3

    @given(pair_strategy)
    @settings(max_examples=60, deadline=None)
    def test_kendall_matches_pair_count(self, ab):
        a, b = ab
        assert kendall_tau_distance(a, b) == brute_kendall(a, b)
        assert kendall_tau_distance(a, b) == kendall_tau_distance(b, a)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            hamming_theta_distance([0.1], [0.1, 0.2])
        with pytest.raises(InvalidArgumentError):
            kendall_tau_distance([0.1], [0.1, 0.2])


def island(keys_list, p_e=2):
    members = [Individual(np.asarray(k, dtype=float), (float(i),)) for i, k in enumerate(keys_list)]
    return Population.from_members(members, p_e, 1)


class TestPickPair:
    def test_single_island(self):
        with pytest.raises(NotApplicableError):
            pick_ipr_pair([island([[0.1]] * 5)], 0, hamming_theta_distance, RngStream(0))

    def test_converged(self):
        pops = [island([[0.2, 0.8]] * 5), island([[0.2, 0.8]] * 5)]
        assert pick_ipr_pair(pops, 0, kendall_tau_distance, RngStream(0)) is None

    def test_distant_elites(self):
        a = island([[0.1, 0.2, 0.3, 0.4]] * 5)
        b = island([[0.4, 0.3, 0.2, 0.1]] * 5)
        base, guide = pick_ipr_pair([a, b], 6, kendall_tau_distance, RngStream(0))
        assert kendall_tau_distance(base.keys, guide.keys) >= 6
        assert any(base is m for m in a.elite + b.elite)


class TestIpr:
    def setup_method(self):
        rng = np.random.default_rng(5)
        self.tsp = TspDecoder(TspInstance(random_tsp_matrix(rng, 8)))
        w = rng.integers(1, 30, 8)
        self.ks = KnapsackDecoder(KnapsackInstance(w, rng.integers(1, 30, 8), int(w.sum() // 2)))

    def test_base_equals_guide(self):
        base = evaluate(self.tsp, np.random.default_rng(0).random(8))
        assert ipr(base, base, "permutation", 1, 1.0, self.tsp) is base

    def test_zero_depth(self):
        rng = np.random.default_rng(0)
        base = evaluate(self.tsp, rng.random(8))
        guide = evaluate(self.tsp, rng.random(8))
        assert ipr(base, guide, "permutation", 1, 0.0, self.tsp) is base

    def test_indicator_full_block(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            base = evaluate(self.ks, rng.random(8))
            guide = evaluate(self.ks, rng.random(8))
            seen = []
            out = ipr(base, guide, "indicator", 8, 1.0, self.ks, on_step=lambda c: seen.append(c.copy()))
            assert len(seen) == 1 and np.array_equal(seen[0], guide.keys)
            assert out.fitness == max(base.fitness, guide.fitness)

    @pytest.mark.parametrize("variant", ["permutation", "indicator"])
    def test_never_worse_and_monotone_distance(self, variant):
        dec = self.tsp if variant == "permutation" else self.ks
        metric = kendall_tau_distance if variant == "permutation" else hamming_theta_distance
        rng = np.random.default_rng(1)
        for _ in range(30):
            base = evaluate(dec, rng.random(8))
            guide = evaluate(dec, rng.random(8))
            dists = [metric(base.keys, guide.keys)]
            out = ipr(base, guide, variant, 2, 1.0, dec, on_step=lambda c: dists.append(metric(c, guide.keys)))
            assert not (dec.senses[0] * out.fitness[0] > dec.senses[0] * base.fitness[0])
            assert all(b <= a for a, b in zip(dists, dists[1:]))

    def test_permutation_single_key_blocks_do_not_move(self):
        rng = np.random.default_rng(2)
        base = evaluate(self.tsp, rng.random(8))
        guide = evaluate(self.tsp, rng.random(8))
        assert ipr(base, guide, "permutation", 1, 1.0, self.tsp) is base

    @pytest.mark.parametrize("block", [2, 3, 8])
    def test_permutation_full_walk_matches_guide_within_blocks(self, block):
        rng = np.random.default_rng(2)
        base = evaluate(self.tsp, rng.random(8))
        guide = evaluate(self.tsp, rng.random(8))
        last = [base.keys]
        ipr(base, guide, "permutation", block, 1.0, self.tsp, on_step=lambda c: last.append(c.copy()))
        for s in range(0, 8, block):
            blk = slice(s, s + block)
            assert kendall_tau_distance(last[-1][blk], guide.keys[blk]) == 0
        assert sorted(last[-1]) == sorted(base.keys)

    def test_decode_budget(self):
        calls = []
        inner = self.tsp

        class Counting(TspDecoder):
            def decode(self, keys):
                calls.append(1)
                return inner.decode(keys)

        dec = Counting(inner.instance)
        rng = np.random.default_rng(4)
        for block, depth in [(1, 1.0), (2, 0.5), (3, 1.0), (8, 1.0)]:
            base = evaluate(dec, rng.random(8))
            guide = evaluate(dec, rng.random(8))
            calls.clear()
            ipr(base, guide, "indicator", block, depth, dec)
            b = -(-8 // block)
            assert len(calls) <= -(-depth * b // 1) * b

    def test_control_genes_not_walked(self):
        dec = FunctionDecoder(lambda x: float(x.sum()), n=3)
        base = evaluate(dec, np.array([0.9, 0.9, 0.9, 0.1, 0.1]))
        guide = evaluate(dec, np.array([0.1, 0.1, 0.1, 0.9, 0.9]))
        out = ipr(base, guide, "indicator", 1, 1.0, dec)
        assert out.keys[3:].tolist() == [0.1, 0.1]

    def test_bad_arguments(self):
        base = evaluate(self.tsp, np.full(8, 0.5))
        with pytest.raises(InvalidArgumentError):
            ipr(base, base, "permutation", 9, 1.0, self.tsp)
        with pytest.raises(InvalidArgumentError):
            ipr(base, base, "permutation", 1, 1.5, self.tsp)
