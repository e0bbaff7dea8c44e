# multipair.py
"""
Multi-pair resource allocation
Utility-ordered greedy allocation with re-routing, its random-order
comparator, and the advance-purification baseline with proportional share
"""
import heapq
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Sequence, Set, Tuple

import numpy as np

from errors import ConfigError
from log_config import get_logger
from pathfinding import Path, min_hop_path
from purification import (
    PurificationDecision,
    build_cost_table,
    cumulative_success_probability,
    meets_threshold,
)
from routing import (
    ResidualGraph,
    RouterKind,
    RoutingRequest,
    RoutingSettings,
    RoutingSolution,
    build_solution,
    remaining_demand,
    route,
    solution_width,
)
from topology import Edge, EdgeKey, NetworkGraph

logger = get_logger("multipair")


class QueueOrder(Enum):
    ASCENDING = "ascending"
    DESCENDING = "descending"
    RANDOM = "random"


@dataclass(frozen=True)
class AllocationConfig:
    """Utility weights, router choice and queue order for one allocation run"""
    edge_count: int
    channel_capacity: int
    alpha_star: float = 0.5
    beta_star: float = 0.5
    router: RouterKind = RouterKind.Q_PATH
    order: QueueOrder = QueueOrder.ASCENDING
    seed: int = 0
    settings: RoutingSettings = field(default_factory=RoutingSettings)

    def __post_init__(self):
        if self.edge_count < 1 or self.channel_capacity < 1:
            raise ConfigError("edge_count and channel_capacity must be >= 1")
        if self.alpha_star < 0 or self.beta_star < 0:
            raise ConfigError("utility weights must be non-negative")

    @classmethod
    def for_graph(cls, graph: NetworkGraph, **overrides) -> "AllocationConfig":
        return cls(edge_count=max(graph.edge_count, 1), channel_capacity=max(graph.max_capacity, 1), **overrides)

    @property
    def alpha(self) -> float:
        return self.alpha_star / (2 * self.edge_count)

    @property
    def beta(self) -> float:
        return self.beta_star / (self.edge_count * self.channel_capacity)


@dataclass
class AllocationResult:
    requests: Tuple[RoutingRequest, ...]
    accepted: Dict[int, List[RoutingSolution]]
    denied: List[int]
    consumed_pairs: int
    total_capacity: int
    violations: int = 0
    violating: Dict[int, List[RoutingSolution]] = field(default_factory=dict)
    reroutes: int = 0

    def solutions(self) -> List[RoutingSolution]:
        return [s for index in sorted(self.accepted) for s in self.accepted[index]]

    @property
    def total_throughput(self) -> float:
        return sum(s.expected_throughput for s in self.solutions())

    @property
    def served_connections(self) -> int:
        return sum(s.served for s in self.solutions())

    @property
    def mean_fidelity(self) -> float:
        """Served-weighted mean end-to-end fidelity; 0 when nothing was served"""
        served = self.served_connections
        if served == 0:
            return 0.0
        return sum(s.end_to_end_fidelity * s.served for s in self.solutions()) / served

    @property
    def utilization(self) -> float:
        return self.consumed_pairs / self.total_capacity if self.total_capacity else 0.0

    @property
    def denial_rate(self) -> float:
        return len(self.denied) / len(self.requests) if self.requests else 0.0

    @property
    def violation_rate(self) -> float:
        attempted = self.served_connections + self.violations
        return self.violations / attempted if attempted else 0.0

    def summary(self) -> dict:
        return {
            "requests": len(self.requests),
            "accepted": len(self.requests) - len(self.denied),
            "denied": len(self.denied),
            "throughput": round(self.total_throughput, 6),
            "served_connections": self.served_connections,
            "mean_fidelity": round(self.mean_fidelity, 6),
            "utilization": round(self.utilization, 6),
            "violations": self.violations,
            "reroutes": self.reroutes,
        }


# === Utility ===

def degree_of_freedom(path: Path, graph: NetworkGraph) -> int:
    """Sum of neighbour counts over every node of the path, endpoints included"""
    return sum(graph.degree(node) for node in path.nodes)


def resource_consumption(path: Path, decision: PurificationDecision) -> int:
    """Entangled pairs per connection: sum of (rounds + 1) over path edges"""
    if len(decision.rounds) != path.hop_count:
        raise ValueError("decision does not cover the path")
    return decision.total_cost


def utility(path: Path, decision: PurificationDecision, graph: NetworkGraph, config: AllocationConfig) -> float:
    return (
        config.alpha * degree_of_freedom(path, graph)
        + config.beta * resource_consumption(path, decision)
    )


# === Greedy allocation ===

def allocate(
    graph: NetworkGraph,
    requests: Sequence[RoutingRequest],
    config: AllocationConfig,
) -> AllocationResult:
    """
    Greedy multi-pair allocation

    Every request is routed on the untouched graph and all candidate
    solutions enter one priority queue keyed by utility (ascending by
    default). A popped candidate is served with its current width; if the
    width has dropped to 0 the request is re-routed on the residual graph,
    where its untried paths also get their utility, and queued again. Re-routes are capped at
    the total demand.
    """
    requests = tuple(requests)
    residual = ResidualGraph(graph)
    rng = np.random.default_rng(config.seed)

    queue: List[Tuple[float, int, int, Path, PurificationDecision]] = []
    sequence = 0
    tried: Dict[int, Set[Tuple[int, ...]]] = defaultdict(set)

    def push(index: int, path: Path, decision: PurificationDecision, view: NetworkGraph) -> None:
        nonlocal sequence
        if config.order is QueueOrder.RANDOM:
            key = float(rng.random())
        else:
            key = utility(path, decision, view, config)
            if config.order is QueueOrder.DESCENDING:
                key = -key
        heapq.heappush(queue, (key, sequence, index, path, decision))
        tried[index].add(path.nodes)
        sequence += 1

    for index, request in enumerate(requests):
        for candidate in route(config.router, graph, request, ResidualGraph(graph), config.settings):
            push(index, candidate.path, candidate.decision, graph)

    accepted: Dict[int, List[RoutingSolution]] = {i: [] for i in range(len(requests))}
    accumulated = [0.0] * len(requests)
    reroute_budget = sum(r.demand for r in requests)
    reroutes = 0

    while queue:
        _, _, index, path, decision = heapq.heappop(queue)
        request = requests[index]
        owed = remaining_demand(request.demand, accumulated[index])
        if owed <= 0:
            continue

        width = solution_width(path, decision, residual)
        if width >= 1:
            served = min(width, owed)
            residual.consume(path, decision, served)
            solution = build_solution(graph, request, path, decision, width, served)
            accepted[index].append(solution)
            accumulated[index] += solution.expected_throughput
            continue

        if reroutes >= reroute_budget:
            logger.warning(f"re-route budget of {reroute_budget} exhausted")
            continue
        reroutes += 1
        retry = replace(request, demand=owed)
        fresh = [
            c for c in route(config.router, graph, retry, residual.copy(), config.settings)
            if c.path.nodes not in tried[index]
        ]
        logger.debug(f"request {index}: {path} exhausted, {len(fresh)} new candidate(s)")
        remaining_view = residual.available_graph()
        for candidate in fresh:
            push(index, candidate.path, candidate.decision, remaining_view)

    denied = [i for i in range(len(requests)) if not accepted[i]]
    return AllocationResult(
        requests=requests,
        accepted={i: s for i, s in accepted.items() if s},
        denied=denied,
        consumed_pairs=residual.consumed_pairs,
        total_capacity=graph.total_capacity,
        reroutes=reroutes,
    )


def allocate_random(
    graph: NetworkGraph,
    requests: Sequence[RoutingRequest],
    config: AllocationConfig,
    seed: int,
) -> AllocationResult:
    """allocate with the queue in seeded uniform random order"""
    return allocate(graph, requests, replace(config, order=QueueOrder.RANDOM, seed=seed))


# === Advance-purification baseline ===

def _proportional_share(capacity: int, demands: Dict[int, int]) -> Dict[int, int]:
    """Demand-proportional floors, leftover pairs handed out round-robin by demand"""
    total = sum(demands.values())
    if total <= capacity:
        return dict(demands)
    shares = {i: capacity * d // total for i, d in demands.items()}
    leftover = capacity - sum(shares.values())
    order = sorted(demands, key=lambda i: (-demands[i], i))
    while leftover > 0:
        for i in order:
            if leftover == 0:
                break
            if shares[i] < demands[i]:
                shares[i] += 1
                leftover -= 1
    return shares


def baseline_advance_purification(
    graph: NetworkGraph,
    requests: Sequence[RoutingRequest],
) -> AllocationResult:
    """
    Purify before routing, then share capacity proportionally

    Every edge is pumped up front to the fewest rounds reaching the strictest
    request threshold (edges that never get there are dropped), which leaves
    c // (rounds + 1) purified pairs. Requests take the minimum-hop path of
    the purified graph and split contended edges in proportion to demand.
    Connections whose end-to-end fidelity misses their threshold are counted
    as violations, not as throughput.
    """
    requests = tuple(requests)
    target = max(r.threshold for r in requests)

    purified_edges: List[Edge] = []
    rounds_by_edge: Dict[EdgeKey, int] = {}
    raw_by_edge: Dict[EdgeKey, Edge] = {}
    consumed = 0

    for e in graph.edges:
        table = build_cost_table(e.initial_fidelity, e.capacity)
        rounds = table.rounds_to_reach(target)
        if rounds is None:
            continue
        purified_pairs = e.capacity // (rounds + 1)
        consumed += purified_pairs * rounds
        rounds_by_edge[e.key] = rounds
        raw_by_edge[e.key] = e
        purified_edges.append(Edge(e.u, e.v, purified_pairs, table.fidelity(rounds)))

    purified = graph.with_edges(purified_edges)

    paths: Dict[int, Path] = {}
    users: Dict[EdgeKey, Dict[int, int]] = defaultdict(dict)
    for index, request in enumerate(requests):
        path = min_hop_path(purified, request.source, request.destination)
        if path is None:
            continue
        paths[index] = path
        for key in path.edge_keys:
            users[key][index] = request.demand

    shares = {key: _proportional_share(purified.edge(*key).capacity, demands) for key, demands in users.items()}

    accepted: Dict[int, List[RoutingSolution]] = {}
    violating: Dict[int, List[RoutingSolution]] = {}
    violations = 0

    for index, path in paths.items():
        request = requests[index]
        granted = min(shares[key][index] for key in path.edge_keys)
        if granted < 1:
            continue
        consumed += granted * path.hop_count

        decision = PurificationDecision(tuple(rounds_by_edge[key] for key in path.edge_keys))
        width = min(purified.edge(*key).capacity for key in path.edge_keys)
        fidelity = 1.0
        per_edge: Dict[EdgeKey, float] = {}
        for key, n in zip(path.edge_keys, decision.rounds):
            fidelity *= purified.edge(*key).initial_fidelity
            per_edge[key] = cumulative_success_probability(raw_by_edge[key].initial_fidelity, n) * granted

        solution = RoutingSolution(
            request=request,
            path=path,
            decision=decision,
            width=width,
            served=granted,
            end_to_end_fidelity=fidelity,
            per_edge_expected=per_edge,
            expected_throughput=min(per_edge.values()),
            total_cost=decision.total_cost,
        )
        if meets_threshold(fidelity, request.threshold):
            accepted.setdefault(index, []).append(solution)
        else:
            violating.setdefault(index, []).append(solution)
            violations += granted

    denied = [i for i in range(len(requests)) if i not in accepted]
    if violations:
        logger.debug(f"baseline: {violations} connection(s) below their threshold")
    return AllocationResult(
        requests=requests,
        accepted=accepted,
        denied=denied,
        consumed_pairs=consumed,
        total_capacity=graph.total_capacity,
        violations=violations,
        violating=violating,
    )
