# pathfinding.py
"""
Graph search primitives used by the routers
BFS hop counts, the product-fidelity Dijkstra variant and depth-first
enumeration of the simple paths in one hop class
"""
import heapq
import math
from collections import OrderedDict, deque
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

from log_config import get_logger
from topology import Edge, EdgeKey, NetworkGraph, edge_key

logger = get_logger("pathfinding")

# Decimal places kept when comparing -log fidelity sums; closer costs tie
COST_DECIMALS = 12


@dataclass(frozen=True)
class Path:
    """Simple path given as its node sequence"""
    nodes: Tuple[int, ...]

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise ValueError("a path needs at least two nodes")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"path {self.nodes} repeats a node")

    @property
    def hop_count(self) -> int:
        return len(self.nodes) - 1

    @property
    def source(self) -> int:
        return self.nodes[0]

    @property
    def destination(self) -> int:
        return self.nodes[-1]

    @property
    def edge_keys(self) -> Tuple[EdgeKey, ...]:
        return tuple(edge_key(u, v) for u, v in zip(self.nodes, self.nodes[1:]))

    def edges(self, graph: NetworkGraph) -> Tuple[Edge, ...]:
        """Path edges looked up in graph; raises TopologyError if one is missing"""
        return tuple(graph.edge(u, v) for u, v in zip(self.nodes, self.nodes[1:]))

    def __str__(self) -> str:
        return "-".join(str(n) for n in self.nodes)


def path_fidelity(graph: NetworkGraph, path: Path) -> float:
    """End-to-end fidelity of path without purification"""
    return math.prod(e.initial_fidelity for e in path.edges(graph))


def _bfs_distances(graph: NetworkGraph, origin: int) -> Dict[int, int]:
    distances = {origin: 0}
    queue = deque([origin])
    while queue:
        node = queue.popleft()
        for neighbor in graph.neighbors(node):
            if neighbor not in distances:
                distances[neighbor] = distances[node] + 1
                queue.append(neighbor)
    return distances


def min_hops(graph: NetworkGraph, source: int, destination: int) -> Optional[int]:
    """Fewest hops from source to destination, None when unreachable"""
    if source == destination:
        raise ValueError("source and destination must differ")
    return _bfs_distances(graph, source).get(destination)


def min_hop_path(graph: NetworkGraph, source: int, destination: int) -> Optional[Path]:
    """Lexicographically smallest among the minimum-hop paths"""
    if source == destination:
        raise ValueError("source and destination must differ")
    to_destination = _bfs_distances(graph, destination)
    if source not in to_destination:
        return None

    nodes = [source]
    current = source
    while current != destination:
        remaining = to_destination[current]
        current = next(
            n for n in graph.neighbors(current) if to_destination.get(n) == remaining - 1
        )
        nodes.append(current)
    return Path(tuple(nodes))


def best_fidelity_path(graph: NetworkGraph, source: int, destination: int) -> Optional[Path]:
    """
    Path maximising the product of initial fidelities

    Dijkstra over -log(fidelity) weights. Labels carry (cost, hops, nodes) so
    equal-cost candidates settle by fewer hops, then by node sequence.
    """
    if source == destination:
        raise ValueError("source and destination must differ")

    heap: List[Tuple[float, int, Tuple[int, ...], float]] = [(0.0, 0, (source,), 0.0)]
    settled = set()

    while heap:
        _, hops, nodes, cost = heapq.heappop(heap)
        node = nodes[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == destination:
            return Path(nodes)

        for neighbor in graph.neighbors(node):
            if neighbor in settled:
                continue
            step = -math.log(graph.edge(node, neighbor).initial_fidelity)
            new_cost = cost + step
            heapq.heappush(heap, (round(new_cost, COST_DECIMALS), hops + 1, nodes + (neighbor,), new_cost))

    return None


class HopClassEnumerator:
    """
    Simple paths between two nodes grouped by hop count

    Each hop class is walked depth-first over neighbours in ascending order,
    so paths come out in node-sequence order. A branch is cut as soon as the
    destination lies further away than the hops left. At most `limit`
    accepted paths are kept per class and at most `scan_budget` nodes are
    expanded per class (None for no budget). Build a new enumerator after
    the graph changes.
    """

    def __init__(
        self,
        graph: NetworkGraph,
        source: int,
        destination: int,
        limit: int,
        scan_budget: Optional[int] = None,
    ):
        if limit < 1:
            raise ValueError("limit must be >= 1")
        if source == destination:
            raise ValueError("source and destination must differ")
        self.graph = graph
        self.source = source
        self.destination = destination
        self.limit = limit
        self.scan_budget = scan_budget
        self._to_destination = _bfs_distances(graph, destination)

    @property
    def min_hops(self) -> Optional[int]:
        return self._to_destination.get(self.source)

    @property
    def max_hops(self) -> int:
        """Longest conceivable simple path: one hop per node of the destination's component"""
        if self.min_hops is None:
            return 0
        return len(self._to_destination) - 1

    def paths(self, hops: int, accept: Optional[Callable[[Path], bool]] = None) -> List[Path]:
        """
        Paths with exactly `hops` hops, in node-sequence order

        Paths rejected by `accept` do not count against the limit.
        """
        found, _ = self.scan(hops, accept)
        return found

    def scan(self, hops: int, accept: Optional[Callable[[Path], bool]] = None) -> Tuple[List[Path], bool]:
        """Like paths(), also telling whether the class was cut short by the limit or the budget"""
        found: List[Path] = []
        if self.min_hops is None or not self.min_hops <= hops <= self.max_hops:
            return found, False

        distance = self._to_destination
        visited = OrderedDict.fromkeys([self.source])
        stack = [iter(self.graph.neighbors(self.source))]
        expanded = 0

        while stack:
            child = next(stack[-1], None)
            if child is None:
                stack.pop()
                visited.popitem()
                continue
            if child in visited:
                continue
            left = hops - len(visited)
            if distance.get(child, hops + 1) > left:
                continue
            if child == self.destination:
                if left == 0:
                    path = Path(tuple(visited) + (child,))
                    if accept is None or accept(path):
                        found.append(path)
                        if len(found) >= self.limit:
                            return found, True
                continue
            expanded += 1
            if self.scan_budget is not None and expanded > self.scan_budget:
                logger.warning(
                    f"{hops}-hop paths {self.source}->{self.destination}: scan budget of "
                    f"{self.scan_budget} reached after {len(found)} path(s)"
                )
                return found, True
            visited[child] = None
            stack.append(iter(self.graph.neighbors(child)))

        return found, False


def paths_with_hops(
    graph: NetworkGraph,
    source: int,
    destination: int,
    hops: int,
    limit: int,
) -> List[Path]:
    """Up to `limit` simple paths of exactly `hops` hops, in node-sequence order"""
    if hops < 1:
        raise ValueError("hops must be >= 1")
    if source == destination:
        raise ValueError("source and destination must differ")
    return HopClassEnumerator(graph, source, destination, limit).paths(hops)
