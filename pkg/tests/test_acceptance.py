"""
Statistical reproductions on the bundled backbone and on Waxman graphs.

Every test here runs hundreds of paired trials; run them with `pytest -m slow`.
"""
import math

import pytest

from experiments import Algorithm, ExperimentConfig, run_sweep, time_algorithms

pytestmark = pytest.mark.slow


def backbone_config(**values):
    values.setdefault("record_runtime", False)
    return ExperimentConfig(**values)


def by_point(rows):
    table = {}
    for row in rows:
        table.setdefault(row.sweep_value, {})[row.algorithm] = row
    return table


def combined_se(*rows):
    return math.sqrt(sum(r.throughput_se ** 2 for r in rows))


def test_single_pair_dominance(backbone):
    config = backbone_config(
        thresholds=[0.7, 0.8, 0.9],
        capacities=[50],
        pair_counts=[1],
        trials=500,
        rng_seed=6,
        algorithms=[Algorithm.Q_PATH, Algorithm.Q_LEAP, Algorithm.BASELINE],
    )
    for value, rows in by_point(run_sweep(config, base_graph=backbone)).items():
        path, leap, base = rows[Algorithm.Q_PATH], rows[Algorithm.Q_LEAP], rows[Algorithm.BASELINE]
        assert path.throughput_mean >= leap.throughput_mean >= base.throughput_mean, value
        assert path.throughput_mean - base.throughput_mean > 3 * combined_se(path, base), value


def test_utility_order_beats_random_allocation(backbone):
    config = backbone_config(
        thresholds=[0.7],
        capacities=[2],
        pair_counts=[10],
        weights=[(0.5, 0.5), (1.0, 0.0), (0.0, 1.0)],
        trials=1000,
        rng_seed=12,
        algorithms=[Algorithm.ALG3_PATH, Algorithm.RANDOM_ALLOC],
    )
    table = by_point(run_sweep(config, base_graph=backbone))
    balanced = table["0.5;0.5"][Algorithm.ALG3_PATH]
    assert balanced.throughput_mean >= 1.15 * table["0.5;0.5"][Algorithm.RANDOM_ALLOC].throughput_mean
    for single in ("1;0", "0;1"):
        other = table[single][Algorithm.ALG3_PATH]
        assert balanced.throughput_mean >= other.throughput_mean - other.throughput_se, single


def test_alg3_path_over_alg3_leap_ratio(backbone):
    config = backbone_config(
        thresholds=[0.7],
        capacities=[50],
        pair_counts=[4, 5, 6, 7, 8, 9, 10],
        demand_per_pair=50,
        trials=200,
        rng_seed=11,
        algorithms=[Algorithm.ALG3_PATH, Algorithm.ALG3_LEAP],
    )
    for value, rows in by_point(run_sweep(config, base_graph=backbone)).items():
        ratio = rows[Algorithm.ALG3_PATH].throughput_mean / rows[Algorithm.ALG3_LEAP].throughput_mean
        assert 1.03 <= ratio <= 1.25, f"{value} pairs: ratio {ratio:.3f}"


def assert_monotone(rows, values, increasing):
    for algorithm in {r.algorithm for r in rows}:
        series = [next(r for r in rows if r.algorithm is algorithm and r.sweep_value == v) for v in values]
        for before, after in zip(series, series[1:]):
            slack = max(before.throughput_se, after.throughput_se)
            if increasing:
                assert after.throughput_mean >= before.throughput_mean - slack, (algorithm, after.sweep_value)
            else:
                assert after.throughput_mean <= before.throughput_mean + slack, (algorithm, after.sweep_value)


SWEEP_ALGORITHMS = [Algorithm.Q_PATH, Algorithm.Q_LEAP, Algorithm.ALG3_PATH, Algorithm.ALG3_LEAP, Algorithm.BASELINE]


def test_throughput_falls_with_threshold(backbone):
    thresholds = [0.55, 0.65, 0.75, 0.85, 0.95]
    config = backbone_config(
        thresholds=thresholds,
        capacities=[50],
        pair_counts=[4],
        trials=200,
        rng_seed=9,
        algorithms=SWEEP_ALGORITHMS,
    )
    rows = run_sweep(config, base_graph=backbone)
    assert_monotone(rows, [str(t) for t in thresholds], increasing=False)


def test_throughput_rises_with_capacity(backbone):
    capacities = [10, 20, 30, 40, 50]
    config = backbone_config(
        thresholds=[0.7],
        capacities=capacities,
        pair_counts=[4],
        trials=200,
        rng_seed=10,
        algorithms=SWEEP_ALGORITHMS,
    )
    rows = run_sweep(config, base_graph=backbone)
    assert_monotone(rows, [str(c) for c in capacities], increasing=True)


def test_q_leap_an_order_of_magnitude_faster_at_100_nodes():
    result = time_algorithms([100], threshold=0.6, capacity=10, samples=20, seed=3)
    assert result.mean(100, Algorithm.Q_LEAP) <= result.mean(100, Algorithm.Q_PATH) / 10
