# experiments.py
"""
Trial runner and sweep driver for qroute
Runs every enabled algorithm on identical per-trial samples (graph
fidelities and source-destination pairs) and aggregates the metrics per
sweep point, in trial order regardless of worker completion order
"""
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path as FilePath
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import (
    DEFAULT_FIDELITY_MEAN,
    DEFAULT_FIDELITY_STDDEV,
    DEFAULT_SCAN_BUDGET,
    TIMESTEP_MS,
    get_default_topology_path,
    get_path_limit,
    get_thread_count,
)
from errors import ConfigError
from log_config import get_logger
from multipair import (
    AllocationConfig,
    AllocationResult,
    allocate,
    allocate_random,
    baseline_advance_purification,
)
from routing import ResidualGraph, RouterKind, RoutingRequest, RoutingSettings, RoutingSolution, route
from topology import (
    NetworkGraph,
    TopologyConfig,
    TopologyMode,
    draw_fidelities,
    generate_waxman,
    load_topology,
    with_uniform_capacity,
)

logger = get_logger("experiments")


class Algorithm(Enum):
    Q_PATH = "q_path"
    Q_LEAP = "q_leap"
    ALG3_PATH = "alg3_path"
    ALG3_LEAP = "alg3_leap"
    BASELINE = "baseline"
    RANDOM_ALLOC = "random_alloc"

    @classmethod
    def parse(cls, name: str) -> "Algorithm":
        normalized = name.strip().lower().replace("-", "_")
        if normalized == "random":
            normalized = "random_alloc"
        try:
            return cls(normalized)
        except ValueError:
            raise ConfigError(f"unknown algorithm {name!r}") from None


ALL_ALGORITHMS = tuple(Algorithm)


@dataclass(frozen=True)
class SweepPoint:
    threshold: float
    capacity: int
    pair_count: int
    alpha_star: float = 0.5
    beta_star: float = 0.5


@dataclass
class ExperimentConfig:
    """Sweep axes, trial count and algorithm selection for one experiment"""
    topology: TopologyConfig = field(
        default_factory=lambda: TopologyConfig(mode=TopologyMode.FILE, path=get_default_topology_path())
    )
    thresholds: List[float] = field(default_factory=lambda: [0.7])
    capacities: List[int] = field(default_factory=lambda: [50])
    pair_counts: List[int] = field(default_factory=lambda: [4])
    weights: List[Tuple[float, float]] = field(default_factory=lambda: [(0.5, 0.5)])
    demand_per_pair: int = 50
    trials: int = 1000
    rng_seed: int = 0
    algorithms: List[Algorithm] = field(default_factory=lambda: list(ALL_ALGORITHMS))
    fidelity_mean: float = DEFAULT_FIDELITY_MEAN
    fidelity_stddev: float = DEFAULT_FIDELITY_STDDEV
    path_limit: int = field(default_factory=get_path_limit)
    scan_budget: Optional[int] = DEFAULT_SCAN_BUDGET
    record_runtime: bool = True
    timestep_ms: int = TIMESTEP_MS

    def validate(self) -> None:
        for name in ("thresholds", "capacities", "pair_counts", "weights", "algorithms"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.demand_per_pair < 1:
            raise ConfigError(f"demand_per_pair must be >= 1, got {self.demand_per_pair}")
        if any(not (0.5 < t < 1.0) for t in self.thresholds):
            raise ConfigError(f"thresholds must lie in (0.5, 1): {self.thresholds}")
        if any(c < 1 for c in self.capacities):
            raise ConfigError(f"capacities must be >= 1: {self.capacities}")
        if any(k < 1 for k in self.pair_counts):
            raise ConfigError(f"pair_counts must be >= 1: {self.pair_counts}")
        if any(a < 0 or b < 0 for a, b in self.weights):
            raise ConfigError(f"weights must be non-negative: {self.weights}")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be non-negative")
        self.topology.validate()

    def settings(self) -> RoutingSettings:
        return RoutingSettings(path_limit=self.path_limit, scan_budget=self.scan_budget)

    def points(self) -> List[SweepPoint]:
        return [
            SweepPoint(t, c, k, a, b)
            for t, c, k, (a, b) in itertools.product(
                self.thresholds, self.capacities, self.pair_counts, self.weights
            )
        ]

    def varying_axes(self) -> List[str]:
        axes = [
            name for name, values in (
                ("threshold", self.thresholds),
                ("capacity", self.capacities),
                ("pairs", self.pair_counts),
                ("weights", self.weights),
            )
            if len(values) > 1
        ]
        return axes or ["threshold"]

    # === JSON mapping ===

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown experiment config keys: {', '.join(unknown)}")

        values = dict(data)
        try:
            if "topology" in values:
                values["topology"] = _topology_from_value(values["topology"])
            if "algorithms" in values:
                values["algorithms"] = [Algorithm.parse(a) for a in values["algorithms"]]
            if "weights" in values:
                values["weights"] = [(float(a), float(b)) for a, b in values["weights"]]
            config = cls(**values)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid experiment config: {e}") from e
        config.validate()
        return config

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(FilePath(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["topology"] = {k: (v.value if isinstance(v, Enum) else v) for k, v in asdict(self.topology).items()}
        data["algorithms"] = [a.value for a in self.algorithms]
        data["weights"] = [list(w) for w in self.weights]
        return data


def _topology_from_value(value: Union[str, dict]) -> TopologyConfig:
    if isinstance(value, str):
        return TopologyConfig(mode=TopologyMode.FILE, path=value)
    if not isinstance(value, dict):
        raise ConfigError("topology must be a file path or an object")
    options = dict(value)
    options["mode"] = TopologyMode(options.get("mode", "waxman"))
    return TopologyConfig(**options)


def load_base_graph(topology: TopologyConfig) -> NetworkGraph:
    if topology.mode is TopologyMode.FILE:
        return load_topology(topology.path)
    return generate_waxman(topology)


# === Metrics ===

@dataclass(frozen=True)
class TrialMetrics:
    throughput: float
    fidelity: float
    utilization: float
    denial_rate: float
    violation_rate: float
    served: int
    runtime_ms: float

    @classmethod
    def from_result(cls, result: AllocationResult, runtime_ms: float) -> "TrialMetrics":
        return cls(
            throughput=result.total_throughput,
            fidelity=result.mean_fidelity,
            utilization=result.utilization,
            denial_rate=result.denial_rate,
            violation_rate=result.violation_rate,
            served=result.served_connections,
            runtime_ms=runtime_ms,
        )


@dataclass(frozen=True)
class MetricsRow:
    algorithm: Algorithm
    sweep_param: str
    sweep_value: str
    throughput_mean: float
    throughput_se: float
    fidelity_mean: float
    utilization_mean: float
    denial_rate: float
    violation_rate: float
    runtime_ms: float
    trials: int


def standard_error(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def aggregate(
    algorithm: Algorithm,
    sweep_param: str,
    sweep_value: str,
    metrics: Sequence[TrialMetrics],
    record_runtime: bool = True,
) -> MetricsRow:
    """
    Means over trials; fidelity is averaged over trials that served at least
    one connection (0.0 if none did)
    """
    throughputs = [m.throughput for m in metrics]
    served_fidelities = [m.fidelity for m in metrics if m.served > 0]
    return MetricsRow(
        algorithm=algorithm,
        sweep_param=sweep_param,
        sweep_value=sweep_value,
        throughput_mean=float(np.mean(throughputs)),
        throughput_se=standard_error(throughputs),
        fidelity_mean=float(np.mean(served_fidelities)) if served_fidelities else 0.0,
        utilization_mean=float(np.mean([m.utilization for m in metrics])),
        denial_rate=float(np.mean([m.denial_rate for m in metrics])),
        violation_rate=float(np.mean([m.violation_rate for m in metrics])),
        runtime_ms=float(np.mean([m.runtime_ms for m in metrics])) if record_runtime else 0.0,
        trials=len(metrics),
    )


# === Trials ===

def sample_sd_pairs(node_count: int, count: int, rng: np.random.Generator) -> List[Tuple[int, int]]:
    """
    `count` distinct unordered node pairs, uniform without replacement

    The first k pairs of a larger draw equal a draw of k with the same rng.
    """
    candidates = list(itertools.combinations(range(node_count), 2))
    if count > len(candidates):
        raise ConfigError(f"cannot sample {count} pairs from {node_count} nodes")
    order = rng.permutation(len(candidates))
    return [candidates[i] for i in order[:count]]


def trial_seed(rng_seed: int, trial_index: int) -> int:
    return rng_seed ^ trial_index


def serve_sequentially(
    kind: RouterKind,
    graph: NetworkGraph,
    requests: Sequence[RoutingRequest],
    settings: RoutingSettings,
) -> AllocationResult:
    """Single-pair router applied to each request in turn on one residual graph"""
    residual = ResidualGraph(graph)
    accepted: Dict[int, List[RoutingSolution]] = {}
    for index, request in enumerate(requests):
        solutions = route(kind, graph, request, residual, settings)
        if solutions:
            accepted[index] = solutions
    return AllocationResult(
        requests=tuple(requests),
        accepted=accepted,
        denied=[i for i in range(len(requests)) if i not in accepted],
        consumed_pairs=residual.consumed_pairs,
        total_capacity=graph.total_capacity,
    )


def run_algorithm(
    algorithm: Algorithm,
    graph: NetworkGraph,
    requests: Sequence[RoutingRequest],
    point: SweepPoint,
    settings: RoutingSettings,
    seed: int,
) -> AllocationResult:
    if algorithm is Algorithm.Q_PATH:
        return serve_sequentially(RouterKind.Q_PATH, graph, requests, settings)
    if algorithm is Algorithm.Q_LEAP:
        return serve_sequentially(RouterKind.Q_LEAP, graph, requests, settings)
    if algorithm is Algorithm.BASELINE:
        return baseline_advance_purification(graph, requests)

    config = AllocationConfig.for_graph(
        graph,
        alpha_star=point.alpha_star,
        beta_star=point.beta_star,
        router=RouterKind.Q_LEAP if algorithm is Algorithm.ALG3_LEAP else RouterKind.Q_PATH,
        settings=settings,
    )
    if algorithm is Algorithm.RANDOM_ALLOC:
        return allocate_random(graph, requests, config, seed)
    return allocate(graph, requests, config)


def run_trial(
    base_graph: NetworkGraph,
    point: SweepPoint,
    config: ExperimentConfig,
    trial_index: int,
) -> Dict[Algorithm, TrialMetrics]:
    """
    One trial at one sweep point

    Draws fresh fidelities and source-destination pairs from the trial seed,
    then runs every enabled algorithm on exactly those inputs.
    """
    seed = trial_seed(config.rng_seed, trial_index)
    rng = np.random.default_rng(seed)

    graph = draw_fidelities(base_graph, config.fidelity_mean, config.fidelity_stddev, rng)
    graph = with_uniform_capacity(graph, point.capacity)
    pairs = sample_sd_pairs(graph.node_count, point.pair_count, rng)
    requests = [RoutingRequest(s, d, config.demand_per_pair, point.threshold) for s, d in pairs]
    settings = config.settings()

    metrics: Dict[Algorithm, TrialMetrics] = {}
    for algorithm in config.algorithms:
        started = time.perf_counter()
        result = run_algorithm(algorithm, graph, requests, point, settings, seed)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        metrics[algorithm] = TrialMetrics.from_result(result, elapsed_ms)
    return metrics


def _trial_worker(args: Tuple[NetworkGraph, SweepPoint, ExperimentConfig, int]) -> Dict[Algorithm, TrialMetrics]:
    return run_trial(*args)


def run_point(
    base_graph: NetworkGraph,
    point: SweepPoint,
    config: ExperimentConfig,
    workers: int = 1,
) -> List[Dict[Algorithm, TrialMetrics]]:
    """All trials of one sweep point, returned in trial order"""
    jobs = [(base_graph, point, config, t) for t in range(config.trials)]
    if workers <= 1:
        return [_trial_worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_trial_worker, jobs))


def format_axis_value(axis: str, point: SweepPoint) -> str:
    if axis == "threshold":
        return f"{point.threshold:g}"
    if axis == "capacity":
        return str(point.capacity)
    if axis == "pairs":
        return str(point.pair_count)
    return f"{point.alpha_star:g};{point.beta_star:g}"


def run_sweep(
    config: ExperimentConfig,
    base_graph: Optional[NetworkGraph] = None,
    workers: Optional[int] = None,
) -> List[MetricsRow]:
    """
    Cartesian sweep over thresholds, capacities, pair counts and weights

    Returns one MetricsRow per (sweep point, algorithm), points in sweep
    order and algorithms in config order.
    """
    config.validate()
    base_graph = base_graph if base_graph is not None else load_base_graph(config.topology)
    workers = workers if workers is not None else get_thread_count()
    axes = config.varying_axes()
    sweep_param = "+".join(axes)

    rows: List[MetricsRow] = []
    for point in config.points():
        sweep_value = "/".join(format_axis_value(axis, point) for axis in axes)
        logger.info(f"sweep point {sweep_param}={sweep_value}: {config.trials} trial(s)")
        trials = run_point(base_graph, point, config, workers)
        for algorithm in config.algorithms:
            rows.append(aggregate(
                algorithm,
                sweep_param,
                sweep_value,
                [trial[algorithm] for trial in trials],
                config.record_runtime,
            ))
    return rows


# === Runtime benchmark ===

@dataclass(frozen=True)
class BenchRow:
    nodes: int
    algorithm: Algorithm
    runtime_ms_mean: float
    samples: int


@dataclass
class BenchResult:
    rows: List[BenchRow]
    ordering_holds: bool

    def mean(self, nodes: int, algorithm: Algorithm) -> float:
        for row in self.rows:
            if row.nodes == nodes and row.algorithm is algorithm:
                return row.runtime_ms_mean
        raise KeyError((nodes, algorithm))


BENCH_ALGORITHMS = (Algorithm.Q_LEAP, Algorithm.BASELINE, Algorithm.Q_PATH)


def time_algorithms(
    scales: Sequence[int],
    threshold: float = 0.6,
    capacity: int = 10,
    samples: int = 5,
    demand: int = 1,
    seed: int = 0,
    settings: Optional[RoutingSettings] = None,
) -> BenchResult:
    """
    Mean wall-clock per single-pair invocation on Waxman graphs

    ordering_holds reports whether Q-LEAP < baseline < Q-PATH at every scale
    of 300 nodes or more, and Q-LEAP < Q-PATH at every scale.
    """
    settings = settings or RoutingSettings()
    rows: List[BenchRow] = []
    ordering_holds = True

    for nodes in scales:
        topology = TopologyConfig(node_count=nodes, capacity=capacity, rng_seed=seed)
        if nodes <= 2:
            topology = replace(topology, area_side=0.0, kappa=1.0)
        graph = generate_waxman(topology)
        rng = np.random.default_rng(seed)
        pairs = sample_sd_pairs(nodes, min(samples, nodes * (nodes - 1) // 2), rng)

        timings: Dict[Algorithm, List[float]] = {a: [] for a in BENCH_ALGORITHMS}
        for s, d in pairs:
            request = RoutingRequest(s, d, demand, threshold)
            for algorithm in BENCH_ALGORITHMS:
                started = time.perf_counter()
                if algorithm is Algorithm.BASELINE:
                    baseline_advance_purification(graph, [request])
                else:
                    kind = RouterKind.Q_PATH if algorithm is Algorithm.Q_PATH else RouterKind.Q_LEAP
                    route(kind, graph, request, ResidualGraph(graph), settings)
                timings[algorithm].append((time.perf_counter() - started) * 1000.0)

        means = {a: float(np.mean(t)) for a, t in timings.items()}
        for algorithm in BENCH_ALGORITHMS:
            rows.append(BenchRow(nodes, algorithm, means[algorithm], len(pairs)))

        leap, base, path = means[Algorithm.Q_LEAP], means[Algorithm.BASELINE], means[Algorithm.Q_PATH]
        holds = leap < path and (nodes < 300 or leap < base < path)
        if not holds:
            logger.warning(f"runtime ordering not met at {nodes} nodes: leap={leap:.2f} base={base:.2f} path={path:.2f} ms")
        ordering_holds = ordering_holds and holds
        logger.info(f"bench {nodes} nodes: leap={leap:.2f} baseline={base:.2f} path={path:.2f} ms")

    return BenchResult(rows, ordering_holds)
