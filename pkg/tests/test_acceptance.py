"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v -s`` (the summary
lines are printed even without ``-s``).
"""

import itertools
import statistics
import time

import numpy as np
import pytest

from brkga import (
    BRKGA,
    BiasKind,
    BrkgaConfig,
    InvalidArgumentError,
    KnapsackDecoder,
    KnapsackInstance,
    MpBRKGA,
    RngStream,
    ScheduleBounds,
    SmttDecoder,
    SmttInstance,
    TspDecoder,
    TspInstance,
    abrkga_tick,
    biased_uniform_crossover,
    encode_permutation,
    encode_subset,
    hamming_theta_distance,
    ipr,
    kendall_tau_distance,
    knapsack_decode,
    multi_parent_crossover,
    non_dominated_sort,
    tsp_decode,
)
from brkga.core import evaluate

from oracles import (
    biobjective_knapsack_front,
    brute_fronts,
    knapsack_dp,
    knapsack_subsets,
    random_tsp_matrix,
    tsp_optimum,
)

CLASSIC = dict(population_size=100, elite_size=15, mutant_size=10, rho=0.7, stall_shake=0, stall_reset=0)


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})")
        assert ok, f"criterion {number}: {title}: {detail}"

    return emit


def test_01_worked_example(report):
    x = [0.234, 0.876, 0.321, 0.693, 0.087]
    inst = TspInstance(np.ones((5, 5)) - np.eye(5))
    tour, _ = tsp_decode(x, inst)
    text = "-".join(str(int(c) + 1) for c in tour)
    times = []
    for _ in range(200):
        t0 = time.perf_counter()
        tsp_decode(x, inst)
        times.append(time.perf_counter() - t0)
    ms = statistics.median(times) * 1e3
    ok = text.encode() == b"5-1-3-4-2" and ms < 1.0
    report(1, "worked decode example", ok, f"order {text}, median {ms:.4f} ms")


def test_02_tsp_oracle(report):
    t0 = time.perf_counter()
    hits = 0
    for seed in range(20):
        d = random_tsp_matrix(np.random.default_rng(100 + seed), 8)
        opt = tsp_optimum(d.tolist())
        est = BRKGA(**CLASSIC, max_generations=300, seed=seed).fit(TspDecoder(TspInstance(d)))
        hits += est.best_fitness_ == opt
    elapsed = time.perf_counter() - t0
    report(2, "TSP n=8 exhaustive optimum", hits >= 18 and elapsed < 60, f"{hits}/20 optimal, {elapsed:.1f} s")


def test_03_knapsack_oracle(report):
    t0 = time.perf_counter()
    hits = 0
    for seed in range(20):
        rng = np.random.default_rng(2000 + seed)
        w = rng.integers(5, 41, 15)
        v = rng.integers(5, 61, 15)
        cap = int(w.sum() // 2)
        opt = knapsack_dp(w.tolist(), v.tolist(), cap)
        est = BRKGA(**CLASSIC, max_generations=300, seed=seed).fit(KnapsackDecoder(KnapsackInstance(w, v, cap)))
        hits += est.best_fitness_ == opt
    elapsed = time.perf_counter() - t0
    report(3, "knapsack n=15 DP optimum", hits >= 18 and elapsed < 30, f"{hits}/20 optimal, {elapsed:.1f} s")


def test_04_crossover_statistics(report):
    n = 100_000
    a, b = np.zeros(n), np.ones(n) * 0.5
    child = biased_uniform_crossover(a, b, 0.7, RngStream(2024))
    elite_freq = float(np.mean(child == a))
    parents = [np.full(n, j / 10) for j in range(3)]
    multi = multi_parent_crossover(parents, BiasKind.CONSTANT, RngStream(2025))
    freqs = [float(np.mean(multi == p[0])) for p in parents]
    ok = 0.69 <= elite_freq <= 0.71 and all(0.323 <= f <= 0.343 for f in freqs)
    detail = f"elite {elite_freq:.4f}, three-parent " + " ".join(f"{f:.4f}" for f in freqs)
    report(4, "crossover bias frequencies", ok, detail)


def test_05_elitism_monotonicity(report):
    d = random_tsp_matrix(np.random.default_rng(5), 30)
    est = BRKGA(
        population_size=50, elite_size=8, mutant_size=5, stall_shake=0, stall_reset=0, max_generations=1000, seed=5
    ).fit(TspDecoder(TspInstance(d)))
    best = est.trace_.best
    violations = int(np.sum(np.diff(best) > 0))
    ok = len(best) == 1001 and violations == 0
    report(5, "1000-generation elitism", ok, f"{violations} violations over {len(best) - 1} steps")


def _all_features(**extra):
    return BRKGA(
        population_size=24, elite_size=5, mutant_size=3, num_islands=3, migration_interval=4,
        migration_count=2, ipr_interval=3, stall_shake=3, stall_reset=7, q_learning=True,
        max_generations=30, seed=11, **extra,
    )


def test_06_determinism(report):
    rng = np.random.default_rng(6)
    d = random_tsp_matrix(rng, 10)
    w = rng.integers(5, 40, 12)
    problems = {
        "tsp": (TspDecoder(TspInstance(d)), {}),
        "knapsack": (KnapsackDecoder(KnapsackInstance(w, rng.integers(5, 60, 12), int(w.sum() // 2))),
                     {"ipr_variant": "indicator"}),
        "smtt": (SmttDecoder(SmttInstance(rng.integers(1, 10, 9), rng.integers(5, 30, 9))),
                 {"self_adaptive": True}),
    }
    same, fired = [], set()
    for dec, extra in problems.values():
        a = _all_features(**extra).fit(dec)
        again = _all_features(**extra).fit(dec)
        threaded = _all_features(**extra, n_jobs=4).fit(dec)
        csv = a.trace_.to_csv().encode()
        same.append(csv == again.trace_.to_csv().encode() == threaded.trace_.to_csv().encode())
        fired |= {e for _, e in a.events_}
    bi = KnapsackDecoder(KnapsackInstance(w, rng.integers(5, 60, (2, 12)), int(w.sum() // 2)))
    mps = [MpBRKGA(population_size=24, elite_size=5, mutant_size=3, pi_count=2, pool_mix_interval=3,
                   max_generations=20, seed=11).fit(bi) for _ in range(2)]
    same.append(mps[0].trace_.to_csv() == mps[1].trace_.to_csv())
    ok = all(same) and fired >= {"migrate", "ipr", "shake", "reset"}
    report(6, "byte-identical traces", ok, f"{sum(same)}/{len(same)} identical, events seen {sorted(fired)}")


def test_07_nds_oracle(report):
    rng = np.random.default_rng(7)
    matches = 0
    for k in range(100):
        n = int(rng.integers(1, 201))
        m = int(rng.choice([2, 3]))
        # Every other set uses a coarse integer grid so ties and duplicates occur.
        pts = rng.integers(0, 8, (n, m)) if k % 2 else rng.random((n, m))
        pts = [tuple(p) for p in pts.tolist()]
        matches += [sorted(f) for f in non_dominated_sort(pts)] == brute_fronts(pts)
    report(7, "non-dominated sort vs brute force", matches == 100, f"{matches}/100 sets equal")


def test_08_mp_brkga_recovery(report):
    t0 = time.perf_counter()
    good = 0
    worst_cov = 1.0
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        w = rng.integers(1, 31, 10)
        v = rng.integers(1, 51, (2, 10))
        cap = int(w.sum() // 2)
        truth = biobjective_knapsack_front(w.tolist(), v.tolist(), cap)
        mp = MpBRKGA(population_size=50, elite_size=8, mutant_size=5, pi_count=2, pool_mix_interval=10,
                     max_generations=200, seed=seed).fit(KnapsackDecoder(KnapsackInstance(w, v, cap)))
        found = {tuple(int(x) for x in f) for f in mp.pareto_front_}
        cov = len(found & truth) / len(truth)
        worst_cov = min(worst_cov, cov)
        good += found <= truth and cov >= 0.9
    elapsed = time.perf_counter() - t0
    ok = good >= 18 and elapsed < 120
    report(8, "mp-BRKGA Pareto recovery", ok, f"{good}/20 seeds, worst coverage {worst_cov:.2f}, {elapsed:.1f} s")


def test_09_ipr_contracts(report):
    rng = np.random.default_rng(9)
    tsp = TspDecoder(TspInstance(random_tsp_matrix(rng, 10)))
    w = rng.integers(1, 30, 10)
    ks = KnapsackDecoder(KnapsackInstance(w, rng.integers(1, 30, 10), int(w.sum() // 2)))
    worse = steps_up = 0
    for variant, dec, metric in (("permutation", tsp, kendall_tau_distance), ("indicator", ks, hamming_theta_distance)):
        sign = int(dec.senses[0])
        for _ in range(1000):
            base = evaluate(dec, rng.random(10))
            guide = evaluate(dec, rng.random(10))
            dists = [metric(base.keys, guide.keys)]
            block = int(rng.integers(2, 6))
            out = ipr(base, guide, variant, block, 1.0, dec, on_step=lambda c: dists.append(metric(c, guide.keys)))
            worse += sign * out.fitness[0] > sign * base.fitness[0]
            steps_up += sum(b > a for a, b in zip(dists, dists[1:]))
    equal_guide = 0
    for _ in range(200):
        base = evaluate(ks, rng.random(10))
        guide = evaluate(ks, rng.random(10))
        seen = []
        ipr(base, guide, "indicator", 10, 1.0, ks, on_step=lambda c: seen.append(c.copy()))
        equal_guide += len(seen) == 1 and np.array_equal(seen[0], guide.keys)
    ok = worse == 0 and steps_up == 0 and equal_guide == 200
    detail = f"{worse} worse results, {steps_up} distance increases, {equal_guide}/200 single-block walks hit the guide"
    report(9, "implicit path-relinking contracts", ok, detail)


def test_10_round_trips(report):
    perm_fail = 0
    checked = 0
    for n in range(1, 8):
        inst = TspInstance(np.ones((n, n)) - np.eye(n))
        for seq in itertools.permutations(range(n)):
            checked += 1
            perm_fail += tuple(int(c) for c in tsp_decode(encode_permutation(seq, n), inst)[0]) != seq
    rng = np.random.default_rng(10)
    subset_fail = subsets = 0
    for n in range(1, 11):
        w = rng.integers(1, 20, n).tolist()
        v = rng.integers(1, 20, n).tolist()
        cap = max(1, sum(w) // 2)
        inst = KnapsackInstance(w, v, cap)
        for sel in knapsack_subsets(w, cap):
            subsets += 1
            chosen, value = knapsack_decode(encode_subset(sel, n), inst)
            feasible = sum(w[i] for i in chosen) <= cap
            subset_fail += not (feasible and set(sel) <= set(chosen) and value >= sum(v[i] for i in sel))
    ok = perm_fail == 0 and subset_fail == 0
    report(10, "encoder round-trips", ok,
           f"{checked - perm_fail}/{checked} permutations, {subsets - subset_fail}/{subsets} subsets")


def _random_bounds(rng):
    p_min = int(rng.integers(4, 201))
    pe_max = int(rng.integers(1, (p_min - 1) // 2 + 1))
    pm_max = int(rng.integers(0, p_min - pe_max))
    alpha_min = float(rng.uniform(0.01, 1.0))
    return ScheduleBounds(
        p_max=int(rng.integers(p_min, 401)),
        p_min=p_min,
        pe_min=int(rng.integers(1, pe_max + 1)),
        pe_max=pe_max,
        pm_max=pm_max,
        pm_min=int(rng.integers(0, pm_max + 1)),
        alpha_max=float(rng.uniform(alpha_min, 1.0)),
        alpha_min=alpha_min,
        g_max=int(rng.integers(1, 2001)),
    )


def test_11_schedule_monotonicity(report):
    rng = np.random.default_rng(11)
    direction = invalid = 0
    for _ in range(10_000):
        bounds = _random_bounds(rng)
        g = int(rng.integers(0, 2 * bounds.g_max + 1))
        a = abrkga_tick(g, bounds)
        b = abrkga_tick(g + int(rng.integers(1, bounds.g_max + 1)), bounds)
        direction += not (b.p <= a.p and b.p_m <= a.p_m and b.p_e >= a.p_e and b.alpha <= a.alpha)
        for s in (a, b):
            try:
                BrkgaConfig(n=5, p=s.p, p_e=s.p_e, p_m=s.p_m, elite_mating_fraction=s.alpha)
            except InvalidArgumentError:
                invalid += 1
    ok = direction == 0 and invalid == 0
    report(11, "schedule monotonicity", ok, f"{direction} direction violations, {invalid} invalid snapshots in 10^4 samples")
