# === controller.py ===
import os
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import get_results_dir
from errors import QRouteError
from experiment_reporter import (
    SweepReporter,
    bench_csv_text,
    bench_markdown,
    format_allocation_summary,
    solutions_to_jsonl,
    write_text,
)
from experiments import (
    Algorithm,
    ExperimentConfig,
    SweepPoint,
    run_algorithm,
    run_sweep,
    sample_sd_pairs,
    time_algorithms,
)
from log_config import get_logger
from multipair import AllocationResult
from routing import RoutingRequest, RoutingSettings
from topology import TopologyConfig, generate_waxman, load_topology, mean_degree, save_topology

logger = get_logger("controller")

# === Topology ===

def generate_topology(
    out_path: str,
    node_count: int,
    capacity: int,
    seed: int,
    kappa: float,
    gamma: float,
    area_side: float,
) -> Tuple[bool, str]:
    config = TopologyConfig(
        node_count=node_count,
        kappa=kappa,
        gamma=gamma,
        area_side=area_side,
        capacity=capacity,
        rng_seed=seed,
    )
    try:
        graph = generate_waxman(config)
        save_topology(graph, out_path)
    except (QRouteError, OSError) as e:
        return False, f"Topology generation failed: {str(e)}"

    logger.info(f"generated Waxman graph with seed {seed}: {graph.edge_count} edges")
    return True, (
        f"Wrote {out_path}: {graph.node_count} nodes, {graph.edge_count} edges, "
        f"mean degree {mean_degree(graph):.2f}"
    )

# === Routing ===

def _run_requests(
    topology_path: str,
    requests: Sequence[RoutingRequest],
    algorithm: Algorithm,
    alpha_star: float,
    beta_star: float,
    seed: int,
) -> AllocationResult:
    graph = load_topology(topology_path)
    for request in requests:
        for node in (request.source, request.destination):
            if not 0 <= node < graph.node_count:
                raise QRouteError(f"node {node} is not in {topology_path}")
    point = SweepPoint(requests[0].threshold, graph.max_capacity, len(requests), alpha_star, beta_star)
    return run_algorithm(algorithm, graph, requests, point, RoutingSettings(), seed)


def route_single(
    topology_path: str,
    source: int,
    destination: int,
    demand: int,
    threshold: float,
    algorithm: str,
) -> Tuple[bool, str, str]:
    """
    Route one source-destination pair

    Returns:
        Tuple of (success, JSON lines, message); success is False only on
        configuration or input errors
    """
    try:
        request = RoutingRequest(source, destination, demand, threshold)
        result = _run_requests(topology_path, [request], Algorithm.parse(algorithm), 0.5, 0.5, 0)
    except (QRouteError, OSError) as e:
        return False, "", f"Routing failed: {str(e)}"

    solutions = result.solutions()
    if not solutions:
        return True, "", f"No fidelity-guaranteed path from {source} to {destination} at {threshold}"
    return True, solutions_to_jsonl(solutions), (
        f"{len(solutions)} solution(s), expected throughput {result.total_throughput:.3f}"
    )


def route_multi(
    topology_path: str,
    pairs: Optional[List[Tuple[int, int]]],
    pair_count: int,
    demand: int,
    threshold: float,
    algorithm: str,
    alpha_star: float,
    beta_star: float,
    seed: int,
) -> Tuple[bool, Optional[AllocationResult], str]:
    """
    Allocate several pairs at once; pairs are sampled with `seed` when not given

    Returns:
        Tuple of (success, allocation result, summary text)
    """
    try:
        selected = Algorithm.parse(algorithm)
        if not pairs:
            graph = load_topology(topology_path)
            pairs = sample_sd_pairs(graph.node_count, pair_count, np.random.default_rng(seed))
        requests = [RoutingRequest(s, d, demand, threshold) for s, d in pairs]
        result = _run_requests(topology_path, requests, selected, alpha_star, beta_star, seed)
    except (QRouteError, OSError) as e:
        return False, None, f"Allocation failed: {str(e)}"

    return True, result, format_allocation_summary(result, selected.value)

# === Experiments ===

def run_sweep_from_config(
    config_path: str,
    out_path: Optional[str] = None,
    seed: Optional[int] = None,
    report_path: Optional[str] = None,
) -> Tuple[bool, str, str]:
    """
    Run the sweep described by a JSON config and write its CSV

    Returns:
        Tuple of (success, csv_path, message)
    """
    try:
        config = ExperimentConfig.from_json(config_path)
        if seed is not None:
            config = replace(config, rng_seed=seed)
            config.validate()
        rows = run_sweep(config)
    except (QRouteError, OSError) as e:
        return False, "", f"Sweep failed: {str(e)}"

    logger.info(f"sweep produced {len(rows)} row(s)")
    if out_path is None:
        name = os.path.splitext(os.path.basename(config_path))[0]
        out_path = os.path.join(get_results_dir(), f"{name}.csv")

    reporter = SweepReporter(rows, config)
    success, csv_path, message = reporter.write_csv(out_path)
    if success and report_path:
        report_ok, _, report_message = reporter.write_markdown(report_path)
        message += f"\n{report_message}"
        success = success and report_ok
    return success, csv_path, message


def run_bench(
    scales: Sequence[int],
    threshold: float,
    capacity: int,
    samples: int,
    seed: int,
    out_path: Optional[str] = None,
    report_path: Optional[str] = None,
) -> Tuple[bool, str, str]:
    """
    Time the single-pair algorithms on Waxman graphs of the given sizes

    Returns:
        Tuple of (success, csv_path, message)
    """
    try:
        result = time_algorithms(scales, threshold, capacity, samples=samples, seed=seed)
    except QRouteError as e:
        return False, "", f"Benchmark failed: {str(e)}"

    if out_path is None:
        out_path = os.path.join(get_results_dir(), "runtime.csv")
    try:
        csv_path = write_text(out_path, bench_csv_text(result))
    except OSError as e:
        return False, "", f"Failed to write benchmark table: {str(e)}"

    ordering = "holds" if result.ordering_holds else "does NOT hold"
    message = f"Runtime table written to {csv_path}; expected ordering {ordering}"
    if report_path:
        try:
            write_text(report_path, bench_markdown(result))
        except OSError as e:
            return False, csv_path, f"Failed to write benchmark report: {str(e)}"
        message += f"\nMarkdown report written: {os.path.basename(report_path)}"
    return True, csv_path, message
