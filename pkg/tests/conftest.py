import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))
sys.path.insert(0, str(ROOT / "scripts"))

from prereqgnn import DirectedGraph, load_edge_list


@pytest.fixture
def single_edge_graph() -> DirectedGraph:
    """a -> b."""
    return load_edge_list(["a\tb"])


@pytest.fixture
def triangle() -> DirectedGraph:
    """Directed 3-cycle a -> b -> c -> a."""
    return load_edge_list(["a\tb", "b\tc", "c\ta"])


def directed_cycle(n: int, prefix: str = "v") -> DirectedGraph:
    ids = [f"{prefix}{i}" for i in range(n)]
    edges = [(i, (i + 1) % n) for i in range(n)]
    return DirectedGraph.from_edges(ids, edges)


def two_triangles() -> DirectedGraph:
    ids = [f"t{i}" for i in range(6)]
    edges = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]
    return DirectedGraph.from_edges(ids, edges)


@pytest.fixture
def six_cycle() -> DirectedGraph:
    return directed_cycle(6)


@pytest.fixture
def fixture_graph() -> DirectedGraph:
    """Small irregular digraph used across gnn/predictor tests."""
    return load_edge_list(
        ["a\tb", "b\tc", "c\ta", "a\td", "d\te", "e\tf", "b\te", "f\ta"]
    )


@pytest.fixture
def fixture_features(fixture_graph) -> np.ndarray:
    rng = np.random.default_rng(123)
    return rng.normal(size=(fixture_graph.node_count, 5))
