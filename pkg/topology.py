# topology.py
"""
Network graph model for qroute
Waxman and file-based topology construction, topology file I/O and
threshold pruning of edges that purification can never rescue
"""
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from config import (
    DEFAULT_AREA_SIDE_KM,
    DEFAULT_FIDELITY_MEAN,
    DEFAULT_FIDELITY_STDDEV,
    DEFAULT_GAMMA,
    DEFAULT_KAPPA,
    FIDELITY_CLAMP,
    FIDELITY_FLOOR,
    WAXMAN_MAX_ATTEMPTS,
)
from errors import ConfigError, TopologyError, TopologyGenerationError, TopologyParseError
from log_config import get_logger
from purification import max_purified_fidelity, meets_threshold

logger = get_logger("topology")

EdgeKey = Tuple[int, int]


def edge_key(u: int, v: int) -> EdgeKey:
    """Canonical (low, high) key of an undirected edge"""
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Edge:
    """Quantum channel between two nodes"""
    u: int
    v: int
    capacity: int
    initial_fidelity: float

    @property
    def key(self) -> EdgeKey:
        return edge_key(self.u, self.v)


class NetworkGraph:
    """
    Undirected capacitated graph with per-edge initial fidelity

    Immutable after construction. Transformations return new graphs that
    share the node set.
    """

    def __init__(
        self,
        node_count: int,
        edges: Iterable[Edge],
        coordinates: Optional[Sequence[Tuple[float, float]]] = None,
        waxman_scale: Optional[float] = None,
    ):
        if node_count < 1:
            raise TopologyError("graph needs at least one node")
        if coordinates is not None and len(coordinates) != node_count:
            raise TopologyError("coordinates must be given for every node or for none")

        self._node_count = node_count
        self._coordinates = tuple(tuple(map(float, xy)) for xy in coordinates) if coordinates is not None else None
        # largest pairwise distance used when the graph was drawn from the Waxman model
        self.waxman_scale = waxman_scale

        edge_list: List[Edge] = []
        by_key: Dict[EdgeKey, Edge] = {}
        adjacency: Dict[int, List[int]] = {n: [] for n in range(node_count)}

        for edge in edges:
            _validate_edge(edge, node_count)
            canonical = Edge(*edge.key, edge.capacity, float(edge.initial_fidelity))
            if canonical.key in by_key:
                raise TopologyError(f"duplicate edge {canonical.u}-{canonical.v}")
            by_key[canonical.key] = canonical
            edge_list.append(canonical)
            adjacency[canonical.u].append(canonical.v)
            adjacency[canonical.v].append(canonical.u)

        self._edges = tuple(edge_list)
        self._by_key = by_key
        self._adjacency = {n: tuple(sorted(neigh)) for n, neigh in adjacency.items()}

    # === Accessors ===

    @property
    def node_count(self) -> int:
        return self._node_count

    @property
    def nodes(self) -> range:
        return range(self._node_count)

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return self._edges

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    @property
    def coordinates(self) -> Optional[Tuple[Tuple[float, float], ...]]:
        return self._coordinates

    @property
    def max_capacity(self) -> int:
        return max((e.capacity for e in self._edges), default=0)

    @property
    def total_capacity(self) -> int:
        return sum(e.capacity for e in self._edges)

    def has_edge(self, u: int, v: int) -> bool:
        return edge_key(u, v) in self._by_key

    def edge(self, u: int, v: int) -> Edge:
        try:
            return self._by_key[edge_key(u, v)]
        except KeyError:
            raise TopologyError(f"no edge between {u} and {v}") from None

    def neighbors(self, node: int) -> Tuple[int, ...]:
        """Neighbours in ascending id order"""
        return self._adjacency[node]

    def degree(self, node: int) -> int:
        return len(self._adjacency[node])

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.nodes)
        for e in self._edges:
            graph.add_edge(e.u, e.v, capacity=e.capacity, fidelity=e.initial_fidelity)
        return graph

    def is_connected(self) -> bool:
        return self._node_count == 1 or nx.is_connected(self.to_networkx())

    # === Derived graphs ===

    def with_edges(self, edges: Iterable[Edge]) -> "NetworkGraph":
        return NetworkGraph(self._node_count, edges, self._coordinates, self.waxman_scale)

    def with_fidelities(self, fidelities: Sequence[float]) -> "NetworkGraph":
        if len(fidelities) != len(self._edges):
            raise TopologyError("one fidelity per edge required")
        return self.with_edges(
            replace(e, initial_fidelity=float(f)) for e, f in zip(self._edges, fidelities)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NetworkGraph):
            return NotImplemented
        return (
            self._node_count == other._node_count
            and self._coordinates == other._coordinates
            and sorted(self._edges, key=lambda e: e.key) == sorted(other._edges, key=lambda e: e.key)
        )

    def __repr__(self) -> str:
        return f"NetworkGraph(nodes={self._node_count}, edges={len(self._edges)})"


def _validate_edge(edge: Edge, node_count: int) -> None:
    if edge.u == edge.v:
        raise TopologyError(f"self-loop on node {edge.u}")
    for node in (edge.u, edge.v):
        if not (0 <= node < node_count):
            raise TopologyError(f"edge {edge.u}-{edge.v} references unknown node {node}")
    if int(edge.capacity) != edge.capacity or edge.capacity < 1:
        raise TopologyError(f"edge {edge.u}-{edge.v} capacity must be a positive integer, got {edge.capacity}")
    if not (FIDELITY_FLOOR <= edge.initial_fidelity < 1.0):
        raise TopologyError(
            f"edge {edge.u}-{edge.v} fidelity {edge.initial_fidelity} outside [0.5, 1)"
        )


# === Configuration ===

class TopologyMode(Enum):
    WAXMAN = "waxman"
    FILE = "file"


@dataclass(frozen=True)
class TopologyConfig:
    mode: TopologyMode = TopologyMode.WAXMAN
    node_count: int = 100
    kappa: float = DEFAULT_KAPPA
    gamma: float = DEFAULT_GAMMA
    area_side: float = DEFAULT_AREA_SIDE_KM
    capacity: int = 50
    fidelity_mean: float = DEFAULT_FIDELITY_MEAN
    fidelity_stddev: float = DEFAULT_FIDELITY_STDDEV
    rng_seed: int = 0
    path: Optional[str] = None

    def validate(self) -> None:
        if self.mode is TopologyMode.FILE:
            if not self.path:
                raise ConfigError("file topology needs a path")
            return
        if self.node_count < 2:
            raise ConfigError(f"node_count must be >= 2, got {self.node_count}")
        if not (0.0 < self.kappa <= 1.0):
            raise ConfigError(f"kappa must be in (0, 1], got {self.kappa}")
        if not (0.0 < self.gamma <= 1.0):
            raise ConfigError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.area_side < 0:
            raise ConfigError(f"area_side must be >= 0, got {self.area_side}")
        if self.capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {self.capacity}")
        low, high = FIDELITY_CLAMP
        if not (low <= self.fidelity_mean <= high):
            raise ConfigError(f"fidelity_mean must be in [{low}, {high}], got {self.fidelity_mean}")
        if self.fidelity_stddev < 0:
            raise ConfigError(f"fidelity_stddev must be >= 0, got {self.fidelity_stddev}")
        if self.rng_seed < 0:
            raise ConfigError(f"rng_seed must be non-negative, got {self.rng_seed}")


# === Fidelity sampling ===

def sample_fidelities(rng: np.random.Generator, mean: float, stddev: float, size: int) -> np.ndarray:
    """Normal draws clamped (not resampled) to the fidelity range"""
    low, high = FIDELITY_CLAMP
    return np.clip(rng.normal(mean, stddev, size=size), low, high)


def draw_fidelities(
    graph: NetworkGraph,
    mean: float,
    stddev: float,
    rng: np.random.Generator,
) -> NetworkGraph:
    """Copy of graph with fresh initial fidelities, one draw per edge in edge order"""
    return graph.with_fidelities(sample_fidelities(rng, mean, stddev, graph.edge_count).tolist())


def with_uniform_capacity(graph: NetworkGraph, capacity: int) -> NetworkGraph:
    return graph.with_edges(replace(e, capacity=capacity) for e in graph.edges)


# === Waxman model ===

def pairwise_distances(positions: np.ndarray) -> np.ndarray:
    deltas = positions[:, None, :] - positions[None, :, :]
    return np.sqrt((deltas ** 2).sum(axis=-1))


def max_pairwise_distance(graph: NetworkGraph) -> float:
    if graph.coordinates is None:
        raise TopologyError("graph has no coordinates")
    return float(pairwise_distances(np.array(graph.coordinates)).max())


def _waxman_attempt(config: TopologyConfig, seed: int) -> NetworkGraph:
    rng = np.random.default_rng(seed)
    n = config.node_count
    positions = rng.uniform(0.0, config.area_side, size=(n, 2))
    distances = pairwise_distances(positions)
    scale = float(distances.max())

    if scale > 0.0:
        probabilities = config.kappa * np.exp(-distances / (scale * config.gamma))
    else:
        probabilities = np.full((n, n), config.kappa)

    rows, cols = np.triu_indices(n, k=1)
    connected = rng.random(rows.size) < probabilities[rows, cols]
    pairs = list(zip(rows[connected].tolist(), cols[connected].tolist()))

    fidelities = sample_fidelities(rng, config.fidelity_mean, config.fidelity_stddev, len(pairs))
    edges = [
        Edge(u, v, config.capacity, float(f))
        for (u, v), f in zip(pairs, fidelities)
    ]
    return NetworkGraph(n, edges, positions.tolist(), waxman_scale=scale)


def generate_waxman(config: TopologyConfig) -> NetworkGraph:
    """
    Random Waxman graph: nodes uniform in a square, pair (u, v) linked with
    probability kappa * exp(-d(u, v) / (L * gamma)), L the largest pairwise
    distance. Disconnected draws are retried with seed + attempt.
    """
    config.validate()
    for attempt in range(WAXMAN_MAX_ATTEMPTS):
        graph = _waxman_attempt(config, config.rng_seed + attempt)
        if graph.is_connected():
            logger.info(
                f"Waxman graph: {graph.node_count} nodes, {graph.edge_count} edges "
                f"(seed {config.rng_seed}, attempt {attempt + 1})"
            )
            return graph
        logger.debug(f"Waxman attempt {attempt + 1} disconnected, retrying")

    raise TopologyGenerationError(
        f"no connected Waxman graph after {WAXMAN_MAX_ATTEMPTS} attempts "
        f"(nodes={config.node_count}, kappa={config.kappa}, gamma={config.gamma})"
    )


# === File I/O ===

def _format_fidelity(value: float) -> str:
    text = f"{value:.6f}"
    return text if float(text) == value else repr(value)


def _format_coordinate(value: float) -> str:
    text = f"{value:.1f}"
    return text if float(text) == value else repr(value)


def load_topology(path) -> NetworkGraph:
    """
    Parse a topology file

    Node lines are `N <id> [x_km y_km]`, edge lines `E <u> <v> <capacity> <fidelity>`.
    Anything after `#` is a comment. Node ids must be contiguous from 0.
    """
    path = str(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise TopologyError(f"cannot read topology file {path}: {e}") from e

    nodes: Dict[int, Optional[Tuple[float, float]]] = {}
    edge_rows: List[Tuple[int, Edge]] = []

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind = fields[0].upper()

        try:
            if kind == "N":
                if len(fields) not in (2, 4):
                    raise ValueError("node line needs `N <id>` or `N <id> <x> <y>`")
                node_id = int(fields[1])
                if node_id in nodes:
                    raise ValueError(f"duplicate node {node_id}")
                nodes[node_id] = (float(fields[2]), float(fields[3])) if len(fields) == 4 else None
            elif kind == "E":
                if len(fields) != 5:
                    raise ValueError("edge line needs `E <u> <v> <capacity> <fidelity>`")
                u, v, capacity = int(fields[1]), int(fields[2]), int(fields[3])
                fidelity = float(fields[4])
                if not (FIDELITY_FLOOR <= fidelity < 1.0):
                    raise ValueError(f"fidelity {fidelity} outside [0.5, 1)")
                if u == v:
                    raise ValueError(f"self-loop on node {u}")
                if capacity < 1:
                    raise ValueError(f"capacity must be >= 1, got {capacity}")
                edge_rows.append((line_number, Edge(u, v, capacity, fidelity)))
            else:
                raise ValueError(f"unknown record type {fields[0]!r}")
        except ValueError as e:
            raise TopologyParseError(str(e), line_number, path) from e

    if not nodes:
        raise TopologyParseError("no nodes declared", None, path)
    if sorted(nodes) != list(range(len(nodes))):
        raise TopologyParseError("node ids must be contiguous from 0", None, path)

    coordinates = [nodes[n] for n in range(len(nodes))]
    if all(xy is None for xy in coordinates):
        coordinates = None
    elif any(xy is None for xy in coordinates):
        raise TopologyParseError("either every node or no node may carry coordinates", None, path)

    seen: Dict[EdgeKey, int] = {}
    for line_number, edge in edge_rows:
        for node in (edge.u, edge.v):
            if node not in nodes:
                raise TopologyParseError(f"unknown node {node}", line_number, path)
        if edge.key in seen:
            raise TopologyParseError(
                f"duplicate edge {edge.u}-{edge.v} (first on line {seen[edge.key]})", line_number, path
            )
        seen[edge.key] = line_number

    graph = NetworkGraph(len(nodes), [e for _, e in edge_rows], coordinates)
    logger.info(f"Loaded topology {path}: {graph.node_count} nodes, {graph.edge_count} edges")
    return graph


def save_topology(graph: NetworkGraph, path) -> None:
    lines = [f"# qroute topology: {graph.node_count} nodes, {graph.edge_count} edges"]
    for node in graph.nodes:
        if graph.coordinates is not None:
            x, y = graph.coordinates[node]
            lines.append(f"N {node} {_format_coordinate(x)} {_format_coordinate(y)}")
        else:
            lines.append(f"N {node}")
    for e in graph.edges:
        lines.append(f"E {e.u} {e.v} {e.capacity} {_format_fidelity(e.initial_fidelity)}")

    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote topology {path}")


# === Pruning ===

def prune_infeasible_edges(graph: NetworkGraph, threshold: float) -> NetworkGraph:
    """Keep only edges whose fully purified fidelity reaches threshold"""
    kept = [
        e for e in graph.edges
        if meets_threshold(max_purified_fidelity(e.initial_fidelity, e.capacity), threshold)
    ]
    if len(kept) < graph.edge_count:
        logger.debug(f"pruned {graph.edge_count - len(kept)} edges below threshold {threshold}")
    return graph.with_edges(kept)


def mean_degree(graph: NetworkGraph) -> float:
    return 2.0 * graph.edge_count / graph.node_count if graph.node_count else math.nan
