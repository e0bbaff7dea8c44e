# purification.py
"""
Fidelity algebra for entanglement pumping
Pairwise purification, recursive pumping, per-edge cost tables, success
probabilities and the purification decisions used by the routers
"""
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache, reduce
from typing import Dict, Hashable, Optional, Sequence, Tuple

import numpy as np

from config import BRUTE_FORCE_GUARD, CRITICAL_FIDELITY_TOLERANCE, FIDELITY_FLOOR
from errors import EnumerationLimitError, FidelityDomainError
from log_config import get_logger

logger = get_logger("purification")

# Slack used whenever a product fidelity is compared with a threshold
FIDELITY_EPSILON = 1e-12

# (initial fidelity, capacity) for each edge of a path, in path order
PathEdges = Sequence[Tuple[float, int]]


def _check_fidelity(x: float, name: str = "fidelity") -> None:
    if not (FIDELITY_FLOOR <= x < 1.0):
        raise FidelityDomainError(f"{name}={x!r} outside [0.5, 1)")


def _combine(x1: float, x2: float) -> float:
    agree = x1 * x2
    return agree / (agree + (1.0 - x1) * (1.0 - x2))


def meets_threshold(fidelity: float, threshold: float) -> bool:
    return fidelity >= threshold - FIDELITY_EPSILON


def purify_pair(x1: float, x2: float) -> float:
    """
    One purification step on two pairs of fidelity x1 and x2

    Returns x1*x2 / (x1*x2 + (1-x1)(1-x2)), the fidelity of the surviving
    pair when the step succeeds.
    """
    _check_fidelity(x1, "x1")
    _check_fidelity(x2, "x2")
    return _combine(x1, x2)


def pumped_fidelity(f0: float, rounds: int) -> float:
    """
    Fidelity after `rounds` pumping rounds, each combining a fresh base pair
    of fidelity f0 with the current pair
    """
    _check_fidelity(f0, "f0")
    if rounds < 0:
        raise ValueError(f"rounds must be >= 0, got {rounds}")
    current = f0
    for _ in range(rounds):
        current = _combine(f0, current)
    return current


def success_probability(x1: float, x2: float) -> float:
    """Probability that one purification step on (x1, x2) succeeds"""
    _check_fidelity(x1, "x1")
    _check_fidelity(x2, "x2")
    return x1 * x2 + (1.0 - x1) * (1.0 - x2)


def cumulative_success_probability(f0: float, rounds: int) -> float:
    """
    Probability that all `rounds` pumping rounds succeed

    Round n combines the fresh pair f0 with the pair produced by round n-1.
    """
    _check_fidelity(f0, "f0")
    if rounds < 0:
        raise ValueError(f"rounds must be >= 0, got {rounds}")
    probability = 1.0
    current = f0
    for _ in range(rounds):
        probability *= f0 * current + (1.0 - f0) * (1.0 - current)
        current = _combine(f0, current)
    return probability


# === Cost tables ===

@dataclass(frozen=True)
class CostTableEntry:
    round: int
    fidelity: float
    improvement: float


@dataclass(frozen=True)
class PurificationCostTable:
    """Round -> (fidelity, improvement) lookup for one edge"""
    initial_fidelity: float
    entries: Tuple[CostTableEntry, ...]

    @property
    def max_round(self) -> int:
        return len(self.entries) - 1

    @property
    def max_fidelity(self) -> float:
        return self.entries[-1].fidelity

    def fidelity(self, rounds: int) -> float:
        return self.entries[rounds].fidelity

    def improvement(self, rounds: int) -> float:
        return self.entries[rounds].improvement

    def rounds_to_reach(self, target: float) -> Optional[int]:
        """Fewest rounds whose fidelity reaches target, or None if the table never does"""
        for entry in self.entries:
            if meets_threshold(entry.fidelity, target):
                return entry.round
        return None


@lru_cache(maxsize=65536)
def build_cost_table(f0: float, capacity: int) -> PurificationCostTable:
    """Cost table for rounds 0..capacity-1 (a round consumes one extra pair)"""
    _check_fidelity(f0, "f0")
    if capacity < 1:
        raise ValueError(f"capacity must be >= 1, got {capacity}")

    entries = [CostTableEntry(0, f0, 0.0)]
    current = f0
    for n in range(1, capacity):
        nxt = _combine(f0, current)
        entries.append(CostTableEntry(n, nxt, nxt - current))
        current = nxt
    return PurificationCostTable(f0, tuple(entries))


# === Decisions ===

@dataclass(frozen=True)
class PurificationDecision:
    """Pumping rounds per path edge, in path order"""
    rounds: Tuple[int, ...]

    @property
    def total_rounds(self) -> int:
        return sum(self.rounds)

    @property
    def total_cost(self) -> int:
        """Entangled pairs one end-to-end connection consumes"""
        return sum(n + 1 for n in self.rounds)

    def as_mapping(self, edges: Sequence[Hashable]) -> Dict[Hashable, int]:
        if len(edges) != len(self.rounds):
            raise ValueError("decision does not cover the given edges")
        return dict(zip(edges, self.rounds))


class ImprovementCriterion(Enum):
    """How the greedy decision ranks the next round on each edge"""
    EDGE_FIDELITY = "edge_fidelity"  # largest increase of the edge's own fidelity
    END_TO_END = "end_to_end"        # largest ratio F(n+1) / F(n), i.e. of the fidelity product


def end_to_end_fidelity(path_edges: PathEdges, rounds: Sequence[int]) -> float:
    """Product of per-edge pumped fidelities"""
    return math.prod(
        build_cost_table(f0, capacity).fidelity(n)
        for (f0, capacity), n in zip(path_edges, rounds)
    )


def greedy_purification_decision(
    path_edges: PathEdges,
    threshold: float,
    criterion: ImprovementCriterion = ImprovementCriterion.EDGE_FIDELITY,
    initial_rounds: Optional[Sequence[int]] = None,
) -> Optional[PurificationDecision]:
    """
    Add one pumping round at a time until the path meets threshold

    Each step purifies the edge whose next round brings the largest gain
    under `criterion`, ties going to the lowest path index. Returns None when
    every edge is at its last round and the product is still too low.

    Args:
        path_edges: (initial fidelity, capacity) per edge in path order
        threshold: required end-to-end fidelity
        criterion: how the gain of a round is measured
        initial_rounds: rounds already committed per edge (defaults to zero)
    """
    if not path_edges:
        raise ValueError("path must have at least one edge")

    tables = [build_cost_table(f0, capacity) for f0, capacity in path_edges]
    rounds = list(initial_rounds) if initial_rounds is not None else [0] * len(tables)
    if len(rounds) != len(tables) or any(not 0 <= n <= t.max_round for t, n in zip(tables, rounds)):
        raise ValueError(f"initial rounds {rounds} do not fit the path")

    while not meets_threshold(math.prod(t.fidelity(n) for t, n in zip(tables, rounds)), threshold):
        best_index = -1
        best_gain = -math.inf
        for index, (table, n) in enumerate(zip(tables, rounds)):
            if n >= table.max_round:
                continue
            if criterion is ImprovementCriterion.END_TO_END:
                gain = table.fidelity(n + 1) / table.fidelity(n)
            else:
                gain = table.improvement(n + 1)
            if gain > best_gain:
                best_gain = gain
                best_index = index
        if best_index < 0:
            return None
        rounds[best_index] += 1

    return PurificationDecision(tuple(rounds))


def brute_force_purification_decision(
    path_edges: PathEdges,
    threshold: float,
    guard: int = BRUTE_FORCE_GUARD,
) -> Optional[PurificationDecision]:
    """
    Cheapest round vector meeting threshold, by exhaustive enumeration

    Ties on cost go to the highest fidelity, then to the lexicographically
    smallest round vector.
    """
    if not path_edges:
        raise ValueError("path must have at least one edge")

    grid_size = math.prod(capacity for _, capacity in path_edges)
    if grid_size > guard:
        raise EnumerationLimitError(
            f"{grid_size} round vectors exceed the enumeration guard of {guard}"
        )

    tables = [build_cost_table(f0, capacity) for f0, capacity in path_edges]
    fidelity_axes = [np.array([e.fidelity for e in t.entries]) for t in tables]
    round_axes = [np.arange(t.max_round + 1) for t in tables]

    fidelity_grid = reduce(np.multiply, np.ix_(*fidelity_axes))
    cost_grid = reduce(np.add, np.ix_(*round_axes))

    feasible = fidelity_grid >= threshold - FIDELITY_EPSILON
    if not feasible.any():
        return None

    min_cost = cost_grid[feasible].min()
    candidates = np.argwhere(feasible & (cost_grid == min_cost))
    best = max(
        (tuple(int(i) for i in index) for index in candidates),
        key=lambda index: (fidelity_grid[index], tuple(-i for i in index)),
    )
    return PurificationDecision(best)


# === Critical fidelity ===

def purification_derivative(x: float) -> float:
    """Slope of x -> f(x, x), i.e. 2x(1-x) / (2x^2 - 2x + 1)^2"""
    denominator = 2.0 * x * x - 2.0 * x + 1.0
    return 2.0 * x * (1.0 - x) / (denominator * denominator)


def critical_fidelity(tolerance: float = CRITICAL_FIDELITY_TOLERANCE) -> float:
    """
    Fidelity above which a pumping round gains less than it starts from

    Bisection for purification_derivative(x) = 1 on [0.5, 1).
    """
    low, high = 0.5, 1.0
    while high - low > tolerance:
        mid = (low + high) / 2.0
        if purification_derivative(mid) > 1.0:
            low = mid
        else:
            high = mid
    root = (low + high) / 2.0
    logger.debug(f"critical fidelity {root:.6f}")
    return root


def max_purified_fidelity(f0: float, capacity: int) -> float:
    return build_cost_table(f0, capacity).max_fidelity
