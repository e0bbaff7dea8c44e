from pathlib import Path

import numpy as np
import pytest

from topology import Edge, NetworkGraph, load_topology

REPO_ROOT = Path(__file__).resolve().parent.parent
BACKBONE_PATH = REPO_ROOT / "data" / "us_backbone.txt"

# node ids of the order-sensitivity fixture
S1, S2, R1, R2, D1, D2, A, B, C = range(9)


def make_graph(node_count, edges, capacity=5):
    """edges: (u, v, fidelity) or (u, v, fidelity, capacity)"""
    built = []
    for spec in edges:
        u, v, fidelity = spec[:3]
        cap = spec[3] if len(spec) == 4 else capacity
        built.append(Edge(u, v, cap, fidelity))
    return NetworkGraph(node_count, built)


def random_graph(rng, node_count, edge_probability, max_capacity, fidelity_range):
    edges = []
    for u in range(node_count):
        for v in range(u + 1, node_count):
            if rng.random() < edge_probability:
                edges.append(Edge(
                    u, v,
                    int(rng.integers(1, max_capacity + 1)),
                    float(rng.uniform(*fidelity_range)),
                ))
    return NetworkGraph(node_count, edges)


@pytest.fixture
def triangle():
    return make_graph(3, [(0, 1, 0.8), (1, 2, 0.8), (0, 2, 0.8)])


@pytest.fixture
def line4():
    """a-b-c-d as 0-1-2-3"""
    return make_graph(4, [(0, 1, 0.9), (1, 2, 0.9), (2, 3, 0.9)])


@pytest.fixture
def square():
    """4-cycle 0-1-2-3-0"""
    return make_graph(4, [(0, 1, 0.9), (1, 2, 0.9), (2, 3, 0.9), (3, 0, 0.9)])


@pytest.fixture
def bottleneck():
    """
    Two requests share the r1-r2 edge; s1 can detour over a-b-c to d1,
    s2 has no alternative. Every edge carries one pair of fidelity 0.95.
    """
    edges = [
        (S1, R1), (S2, R1), (R1, R2), (R2, D1), (R2, D2),
        (S1, A), (A, B), (B, C), (C, D1),
    ]
    return make_graph(9, [(u, v, 0.95) for u, v in edges], capacity=1)


@pytest.fixture(scope="session")
def backbone():
    return load_topology(BACKBONE_PATH)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
