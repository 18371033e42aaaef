"""Restricted directed k-tuple enumeration and per-position substitution graphs.

A k-tuple (s_1, ..., s_k) is admitted when every later element is an
out-neighbor of, or equal to, some earlier element. Position graph j connects
tuple S to tuple T when T differs from S only at position j and T[j] is an
out-neighbor of S[j]; substituted tuples that fall outside the admitted set
are dropped so every position graph shares one node set.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, ShapeError
from .graph import DirectedGraph

MAX_ORDER = 3


@dataclass(frozen=True)
class TupleSet:
    """Lexicographically sorted admitted k-tuples with their index map."""

    k: int
    tuples: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if any(len(t) != self.k for t in self.tuples):
            raise ConfigError(f"all tuples must have length {self.k}")
        if any(a >= b for a, b in zip(self.tuples, self.tuples[1:])):
            raise ConfigError("tuples must be strictly lexicographically sorted")

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {t: i for i, t in enumerate(self.tuples)}

    def __len__(self) -> int:
        return len(self.tuples)


@dataclass(frozen=True)
class PositionGraph:
    """Directed substitution graph over tuple indices for one tuple position."""

    position: int  # 1-based
    arcs: tuple[tuple[int, int], ...]


def enumerate_tuples(graph: DirectedGraph, k: int) -> TupleSet:
    """Enumerate the admitted k-tuples of a graph in lexicographic order.

    For k=1 this is all N singletons; the first element is unconstrained and
    the admission condition binds from the second element on.
    """
    if not 1 <= k <= MAX_ORDER:
        raise ConfigError(f"tuple order k must lie in 1..{MAX_ORDER}, got {k}")
    out_adj = graph.out_adj
    result: list[tuple[int, ...]] = []

    def extend(prefix: list[int], allowed: set[int]) -> None:
        if len(prefix) == k:
            result.append(tuple(prefix))
            return
        for c in sorted(allowed):
            extend(prefix + [c], allowed | set(out_adj[c]) | {c})

    for s1 in range(graph.node_count):
        extend([s1], set(out_adj[s1]) | {s1})
    return TupleSet(k=k, tuples=tuple(result))


def build_position_graph(graph: DirectedGraph, tuples: TupleSet, j: int) -> PositionGraph:
    """Build the substitution graph for position j (1-based)."""
    if not 1 <= j <= tuples.k:
        raise ConfigError(f"position j must lie in 1..{tuples.k}, got {j}")
    idx = tuples.index
    pos = j - 1
    arcs: list[tuple[int, int]] = []
    for src, tup in enumerate(tuples.tuples):
        for w in graph.out_adj[tup[pos]]:
            cand = tup[:pos] + (w,) + tup[pos + 1 :]
            dst = idx.get(cand)
            if dst is not None:
                arcs.append((src, dst))
    return PositionGraph(position=j, arcs=tuple(arcs))


def build_position_graphs(graph: DirectedGraph, tuples: TupleSet) -> list[PositionGraph]:
    return [build_position_graph(graph, tuples, j) for j in range(1, tuples.k + 1)]


def initial_tuple_features(tuples: TupleSet, node_features: np.ndarray) -> np.ndarray:
    """Concatenate the k node embedding rows of each tuple, in tuple order."""
    if node_features.ndim != 2:
        raise ShapeError("node features must be a 2-D matrix")
    if tuples.tuples and max(max(t) for t in tuples.tuples) >= node_features.shape[0]:
        raise ShapeError(
            f"node features have {node_features.shape[0]} rows, fewer than the "
            "largest node index in the tuple set"
        )
    idx = np.asarray(tuples.tuples, dtype=np.intp).reshape(len(tuples), tuples.k)
    # rows gathered per position, then laid side by side: dim = k * d
    return node_features[idx].reshape(len(tuples), tuples.k * node_features.shape[1])


def dump_tuple_set(tuples: TupleSet) -> str:
    """Debug dump: one tuple per line, ``idx<TAB>s1,s2,...,sk``."""
    lines = [f"{i}\t{','.join(str(s) for s in t)}" for i, t in enumerate(tuples.tuples)]
    return "\n".join(lines) + "\n" if lines else ""


def dump_position_graph(pg: PositionGraph) -> str:
    """Debug dump: one arc per line, ``src<TAB>dst`` over tuple indices."""
    lines = [f"{u}\t{v}" for u, v in pg.arcs]
    return "\n".join(lines) + "\n" if lines else ""
