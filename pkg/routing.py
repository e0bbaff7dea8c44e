# routing.py
"""
Single-pair routers for qroute
Q-PATH finds minimum-cost fidelity-guaranteed solutions by iterating over
cost classes; Q-LEAP serves the best-fidelity path with an average-fidelity
purification rule. Both share the width and throughput accounting below.
"""
import heapq
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Set, Tuple

from config import DEFAULT_SCAN_BUDGET, get_path_limit
from errors import ConfigError, FidelityGuaranteeError, QRouteError
from log_config import get_logger
from pathfinding import HopClassEnumerator, Path, best_fidelity_path, min_hops
from purification import (
    ImprovementCriterion,
    PurificationDecision,
    build_cost_table,
    cumulative_success_probability,
    greedy_purification_decision,
    meets_threshold,
    pumped_fidelity,
)
from topology import EdgeKey, NetworkGraph, prune_infeasible_edges

logger = get_logger("routing")

# Slack when turning accumulated expected throughput into whole connections
DEMAND_EPSILON = 1e-9


class RouterKind(Enum):
    Q_PATH = "q-path"
    Q_LEAP = "q-leap"


@dataclass(frozen=True)
class RoutingRequest:
    """Demand of one source-destination pair"""
    source: int
    destination: int
    demand: int
    threshold: float

    def __post_init__(self):
        if self.source == self.destination:
            raise ConfigError(f"request source and destination are both {self.source}")
        if self.demand < 1:
            raise ConfigError(f"demand must be >= 1, got {self.demand}")
        if not (0.5 < self.threshold < 1.0):
            raise ConfigError(f"threshold must be in (0.5, 1), got {self.threshold}")


@dataclass(frozen=True)
class RoutingSettings:
    path_limit: int = field(default_factory=get_path_limit)
    scan_budget: Optional[int] = DEFAULT_SCAN_BUDGET
    criterion: ImprovementCriterion = ImprovementCriterion.EDGE_FIDELITY


@dataclass(frozen=True)
class RoutingSolution:
    """A served path with its purification decision and derived quantities"""
    request: RoutingRequest
    path: Path
    decision: PurificationDecision
    width: int
    served: int
    end_to_end_fidelity: float
    per_edge_expected: Dict[EdgeKey, float]
    expected_throughput: float
    total_cost: int

    @property
    def pairs_consumed(self) -> int:
        return self.served * self.total_cost

    def as_dict(self) -> dict:
        return {
            "source": self.request.source,
            "destination": self.request.destination,
            "path": list(self.path.nodes),
            "rounds_per_edge": {
                f"{u}-{v}": n for (u, v), n in zip(self.path.edge_keys, self.decision.rounds)
            },
            "fidelity": round(self.end_to_end_fidelity, 6),
            "threshold": self.request.threshold,
            "width": self.width,
            "served": self.served,
            "expected_throughput": round(self.expected_throughput, 6),
            "cost": self.total_cost,
        }


class ResidualGraph:
    """Remaining entangled pairs per edge on top of an immutable graph"""

    def __init__(self, base: NetworkGraph):
        self.base = base
        self._remaining: Dict[EdgeKey, int] = {e.key: e.capacity for e in base.edges}

    def remaining(self, key: EdgeKey) -> int:
        return self._remaining[key]

    def consume(self, path: Path, decision: PurificationDecision, connections: int) -> None:
        """Take connections x (rounds + 1) pairs from every path edge"""
        needed = [(key, connections * (n + 1)) for key, n in zip(path.edge_keys, decision.rounds)]
        for key, pairs in needed:
            if pairs > self._remaining[key]:
                raise QRouteError(
                    f"edge {key} has {self._remaining[key]} pairs left, {pairs} requested"
                )
        for key, pairs in needed:
            self._remaining[key] -= pairs

    def available_graph(self) -> NetworkGraph:
        """Edges with pairs left, their capacity set to what remains"""
        return self.base.with_edges(
            replace(e, capacity=self._remaining[e.key])
            for e in self.base.edges
            if self._remaining[e.key] >= 1
        )

    @property
    def consumed_pairs(self) -> int:
        return sum(e.capacity - self._remaining[e.key] for e in self.base.edges)

    def copy(self) -> "ResidualGraph":
        clone = ResidualGraph.__new__(ResidualGraph)
        clone.base = self.base
        clone._remaining = dict(self._remaining)
        return clone


# === Width and throughput ===

def solution_width(path: Path, decision: PurificationDecision, residual: ResidualGraph) -> int:
    """Connections the path can carry now: min over edges of remaining // (rounds + 1)"""
    if len(decision.rounds) != path.hop_count:
        raise ValueError("decision does not cover the path")
    return min(
        residual.remaining(key) // (n + 1)
        for key, n in zip(path.edge_keys, decision.rounds)
    )


def expected_throughput(
    path: Path,
    decision: PurificationDecision,
    width: int,
    graph: NetworkGraph,
    demand: Optional[int] = None,
) -> Tuple[Dict[EdgeKey, float], float]:
    """
    Per-edge and path expected throughput

    Each edge contributes its cumulative purification success probability
    times the connections granted, min(width, demand).
    """
    if width < 1:
        raise ValueError("width must be >= 1")
    granted = width if demand is None else min(width, demand)
    per_edge = {
        e.key: cumulative_success_probability(e.initial_fidelity, n) * granted
        for e, n in zip(path.edges(graph), decision.rounds)
    }
    return per_edge, min(per_edge.values())


def path_edge_specs(graph: NetworkGraph, path: Path) -> List[Tuple[float, int]]:
    return [(e.initial_fidelity, e.capacity) for e in path.edges(graph)]


def build_solution(
    graph: NetworkGraph,
    request: RoutingRequest,
    path: Path,
    decision: PurificationDecision,
    width: int,
    served: int,
) -> RoutingSolution:
    """Assemble a solution and enforce the fidelity guarantee"""
    fidelity = math.prod(
        pumped_fidelity(e.initial_fidelity, n) for e, n in zip(path.edges(graph), decision.rounds)
    )
    if not meets_threshold(fidelity, request.threshold):
        raise FidelityGuaranteeError(
            f"path {path} reaches {fidelity:.6f} < threshold {request.threshold}"
        )
    per_edge, total = expected_throughput(path, decision, width, graph, served)
    return RoutingSolution(
        request=request,
        path=path,
        decision=decision,
        width=width,
        served=served,
        end_to_end_fidelity=fidelity,
        per_edge_expected=per_edge,
        expected_throughput=total,
        total_cost=decision.total_cost,
    )


def remaining_demand(demand: int, accumulated: float) -> int:
    """Connections still owed once accumulated expected throughput is rounded up"""
    return demand - math.ceil(accumulated - DEMAND_EPSILON)


def _serve(
    graph: NetworkGraph,
    request: RoutingRequest,
    residual: ResidualGraph,
    path: Path,
    decision: PurificationDecision,
    accumulated: float,
) -> Optional[RoutingSolution]:
    width = solution_width(path, decision, residual)
    if width == 0:
        return None
    served = min(width, remaining_demand(request.demand, accumulated))
    residual.consume(path, decision, served)
    solution = build_solution(graph, request, path, decision, width, served)
    logger.debug(
        f"serve {path} rounds={decision.rounds} width={width} served={served} "
        f"F={solution.end_to_end_fidelity:.4f} T={solution.expected_throughput:.3f}"
    )
    return solution


# === Q-PATH ===

class _CostClassSearch:
    """
    Candidate state of one Q-PATH run

    Keeps the greedy decision of every enumerated path current with the
    residual graph: after a serve, paths sharing an edge with the served
    one are re-decided, and hop classes that hit their path limit are
    scanned again so paths freed by the change can take the empty slots.
    """

    def __init__(self, request: RoutingRequest, residual: ResidualGraph, settings: RoutingSettings):
        self.request = request
        self.residual = residual
        self.settings = settings
        self.decisions: Dict[Path, PurificationDecision] = {}
        self.queue: List[Tuple[int, int, Path, PurificationDecision]] = []
        self.full_classes: Set[int] = set()
        self._sequence = 0
        self._rebuild()

    def _rebuild(self) -> None:
        self.available = prune_infeasible_edges(self.residual.available_graph(), self.request.threshold)
        self.enumerator = HopClassEnumerator(
            self.available,
            self.request.source,
            self.request.destination,
            self.settings.path_limit,
            self.settings.scan_budget,
        )

    def _admit(self, path: Path) -> bool:
        if path in self.decisions:
            return True
        decision = greedy_purification_decision(
            path_edge_specs(self.available, path), self.request.threshold, self.settings.criterion
        )
        if decision is None:
            return False
        self.decisions[path] = decision
        heapq.heappush(self.queue, (decision.total_cost, self._sequence, path, decision))
        self._sequence += 1
        return True

    def add_class(self, hops: int) -> None:
        _, cut_short = self.enumerator.scan(hops, self._admit)
        if cut_short:
            self.full_classes.add(hops)

    def pop(self) -> Tuple[Path, PurificationDecision]:
        _, _, path, decision = heapq.heappop(self.queue)
        return path, decision

    def forget(self, path: Path) -> None:
        self.decisions.pop(path, None)

    def refresh(self, served: Path) -> None:
        """Bring candidates in line with the residual graph after `served` consumed pairs"""
        touched = set(served.edge_keys)
        lost_edge = any(self.residual.remaining(key) == 0 for key in touched)
        self._rebuild()

        stale = [p for p in self.decisions if touched.intersection(p.edge_keys)]
        for path in stale:
            del self.decisions[path]
        self.queue = [item for item in self.queue if item[2] in self.decisions]
        heapq.heapify(self.queue)

        dropped = 0
        for path in stale:
            usable = all(self.available.has_edge(u, v) for u, v in path.edge_keys)
            if not (usable and self._admit(path)):
                dropped += 1
        if lost_edge or dropped:
            for hops in sorted(self.full_classes):
                self.full_classes.discard(hops)
                self.add_class(hops)


def q_path(
    graph: NetworkGraph,
    request: RoutingRequest,
    residual: Optional[ResidualGraph] = None,
    settings: Optional[RoutingSettings] = None,
) -> List[RoutingSolution]:
    """
    Iterative minimum-cost routing

    For min_cost = H_min, H_min + 1, ... the paths of exactly min_cost hops
    receive a greedy purification decision and join a cost-ordered queue;
    every queued solution costing at most min_cost is then served on the
    residual graph, and candidates touched by a serve are re-decided on
    what is left. Stops when the demand is met or no path remains. The
    residual graph is updated in place.
    """
    residual = residual if residual is not None else ResidualGraph(graph)
    settings = settings or RoutingSettings()

    search = _CostClassSearch(request, residual, settings)
    h_min = search.enumerator.min_hops
    if h_min is None:
        logger.debug(f"q-path: {request.source}->{request.destination} unreachable at {request.threshold}")
        return []

    solutions: List[RoutingSolution] = []
    accumulated = 0.0
    cost_bound = search.available.edge_count * search.available.max_capacity

    min_cost = h_min
    while min_cost <= cost_bound:
        search.add_class(min_cost)

        while search.queue and search.queue[0][0] <= min_cost:
            path, decision = search.pop()
            solution = _serve(graph, request, residual, path, decision, accumulated)
            if solution is None:
                search.forget(path)
                continue
            solutions.append(solution)
            accumulated += solution.expected_throughput
            if remaining_demand(request.demand, accumulated) <= 0:
                return solutions
            search.refresh(path)

        if not search.queue and min_cost >= search.enumerator.max_hops:
            break
        min_cost += 1

    return solutions


# === Q-LEAP ===

def leap_decision(path_edges: Sequence[Tuple[float, int]], threshold: float) -> Optional[PurificationDecision]:
    """
    Purify every edge up to the average fidelity threshold^(1/l)

    Edges that cannot reach the average are pinned at their last round and
    the average is recomputed over the others until nothing changes. Returns
    None when the required average reaches 1. A final greedy top-up covers
    any shortfall left by rounding in the product.
    """
    tables = [build_cost_table(f0, capacity) for f0, capacity in path_edges]
    pinned = set()
    target = threshold

    while True:
        free = [i for i in range(len(tables)) if i not in pinned]
        if not free:
            break
        pinned_product = math.prod(tables[i].max_fidelity for i in pinned)
        target = (threshold / pinned_product) ** (1.0 / len(free))
        if target >= 1.0:
            return None
        unreachable = [i for i in free if tables[i].rounds_to_reach(target) is None]
        if not unreachable:
            break
        pinned.update(unreachable)

    rounds = [
        table.max_round if i in pinned else table.rounds_to_reach(target)
        for i, table in enumerate(tables)
    ]
    return greedy_purification_decision(path_edges, threshold, initial_rounds=rounds)


def _blocking_edges(
    available: NetworkGraph,
    residual: ResidualGraph,
    path: Path,
    decision: Optional[PurificationDecision],
) -> Set[EdgeKey]:
    """Edges to leave out after the best path could not be served"""
    if decision is not None:
        short = {
            key for key, n in zip(path.edge_keys, decision.rounds)
            if residual.remaining(key) < n + 1
        }
        if short:
            return short
    # weakest edge at its best purified fidelity, lowest path index on ties
    tables = [build_cost_table(f0, capacity) for f0, capacity in path_edge_specs(available, path)]
    weakest = min(range(len(tables)), key=lambda i: (tables[i].max_fidelity, i))
    return {path.edge_keys[weakest]}


def q_leap(
    graph: NetworkGraph,
    request: RoutingRequest,
    residual: Optional[ResidualGraph] = None,
    settings: Optional[RoutingSettings] = None,
) -> List[RoutingSolution]:
    """
    Low-complexity routing: repeatedly serve the highest-fidelity path of the
    residual graph, at most `demand` times. A best path that cannot be
    purified to the threshold, or has no width left, gets its blocking edges
    excluded for this request and the search is repeated. Stops when the
    demand is met or no path remains.
    """
    residual = residual if residual is not None else ResidualGraph(graph)
    solutions: List[RoutingSolution] = []
    accumulated = 0.0
    excluded: Set[EdgeKey] = set()

    while len(solutions) < request.demand and remaining_demand(request.demand, accumulated) > 0:
        available = prune_infeasible_edges(residual.available_graph(), request.threshold)
        if excluded:
            available = available.with_edges(e for e in available.edges if e.key not in excluded)
        path = best_fidelity_path(available, request.source, request.destination)
        if path is None:
            break
        decision = leap_decision(path_edge_specs(available, path), request.threshold)
        solution = None
        if decision is not None:
            solution = _serve(graph, request, residual, path, decision, accumulated)
        if solution is None:
            blocking = _blocking_edges(available, residual, path, decision)
            logger.debug(f"q-leap: best path {path} unservable, excluding {sorted(blocking)}")
            excluded |= blocking
            continue
        solutions.append(solution)
        accumulated += solution.expected_throughput

    return solutions


def route(
    kind: RouterKind,
    graph: NetworkGraph,
    request: RoutingRequest,
    residual: Optional[ResidualGraph] = None,
    settings: Optional[RoutingSettings] = None,
) -> List[RoutingSolution]:
    if kind is RouterKind.Q_PATH:
        return q_path(graph, request, residual, settings)
    if kind is RouterKind.Q_LEAP:
        return q_leap(graph, request, residual, settings)
    raise ConfigError(f"unknown router {kind!r}")
