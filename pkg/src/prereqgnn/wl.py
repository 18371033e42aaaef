"""Directed k-tuple color refinement and the derived non-isomorphism test.

The refinement operates on the full k-fold vertex product in lexicographic
order. Each tuple starts from its atomic type (the pattern of equalities and
directed edges among its elements). A round recolors tuple S with the multiset,
over substitution vertices v, of the k-vector of colors of S with v written
into each position; for k=1 the substitution multiset degenerates to the
colors of the node's out-neighbors. Signatures are canonicalized by sorting
and interned injectively, then relabeled densely in first-occurrence order,
so colors stay comparable within one run but carry no meaning across runs.

Differing per-graph color histograms at any round certify non-isomorphism;
equal histograms certify nothing.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass

from .errors import ConfigError
from .graph import DirectedGraph


@dataclass(frozen=True)
class ColorMap:
    """Refinement result: a dense color per tuple, in lexicographic tuple order."""

    colors: tuple[int, ...]
    iteration: int
    stable: bool

    @property
    def class_count(self) -> int:
        return len(set(self.colors))


def _atomic_type(tup: tuple[int, ...], edge_set: frozenset[tuple[int, int]]) -> tuple:
    k = len(tup)
    return tuple(
        tuple(
            2 if tup[i] == tup[j] else (1 if (tup[i], tup[j]) in edge_set else 0)
            for j in range(k)
        )
        for i in range(k)
    )


def _dense_relabel(signatures: list) -> list[int]:
    table: dict = {}
    return [table.setdefault(sig, len(table)) for sig in signatures]


def refinement_history(
    graph: DirectedGraph, k: int, max_iters: int | None = None
) -> tuple[list[list[int]], bool]:
    """Run refinement and return every round's coloring plus a stability flag.

    history[0] is the atomic-type coloring; history[i] the coloring after
    round i. Stops once a round reproduces the previous partition (stable)
    or after max_iters rounds. Memory grows as N**k; intended for the small
    graphs a non-isomorphism test is run on.
    """
    n = graph.node_count
    if not 1 <= k <= 3:
        raise ConfigError(f"refinement order k must lie in 1..3, got {k}")
    if max_iters is None:
        max_iters = max(1, n**k)
    if max_iters < 1:
        raise ConfigError(f"max_iters must be >= 1, got {max_iters}")

    edge_set = graph.edges
    tuples = list(itertools.product(range(n), repeat=k))
    colors = _dense_relabel([_atomic_type(t, edge_set) for t in tuples])
    history = [colors]

    strides = [n ** (k - 1 - j) for j in range(k)]
    out_adj = graph.out_adj
    for _ in range(max_iters):
        if k == 1:
            signatures: list = [
                (colors[v], tuple(sorted(colors[w] for w in out_adj[v]))) for v in range(n)
            ]
        else:
            signatures = []
            for t_idx, tup in enumerate(tuples):
                rows = []
                for v in range(n):
                    rows.append(
                        tuple(colors[t_idx + (v - tup[j]) * strides[j]] for j in range(k))
                    )
                signatures.append((colors[t_idx], tuple(sorted(rows))))
        new_colors = _dense_relabel(signatures)
        if new_colors == colors:
            return history, True
        colors = new_colors
        history.append(colors)
    return history, False


def wl_refine(graph: DirectedGraph, k: int, max_iters: int | None = None) -> ColorMap:
    """Refine tuple colors to stability (or the round budget)."""
    history, stable = refinement_history(graph, k, max_iters)
    # A stable run spends one extra round discovering the fixed point.
    rounds = len(history) if stable else len(history) - 1
    return ColorMap(colors=tuple(history[-1]), iteration=rounds, stable=stable)


def disjoint_union(g1: DirectedGraph, g2: DirectedGraph) -> DirectedGraph:
    """Combine two graphs over disjoint node sets; g2 indices are offset."""
    ids = [f"g1:{x}" for x in g1.node_ids] + [f"g2:{x}" for x in g2.node_ids]
    offset = g1.node_count
    edges = set(g1.edges) | {(u + offset, v + offset) for u, v in g2.edges}
    return DirectedGraph.from_edges(ids, edges)


def distinguish(
    g1: DirectedGraph, g2: DirectedGraph, k: int, max_iters: int | None = None
) -> bool:
    """Certified non-isomorphism test via refinement of the disjoint union.

    True means the per-graph color histograms differed at some round
    (the graphs are certainly non-isomorphic); False only means the test
    could not tell them apart.
    """
    union = disjoint_union(g1, g2)
    history, _ = refinement_history(union, k, max_iters)
    n1 = g1.node_count
    tuples = list(itertools.product(range(union.node_count), repeat=k))
    side1 = [i for i, t in enumerate(tuples) if all(x < n1 for x in t)]
    side2 = [i for i, t in enumerate(tuples) if all(x >= n1 for x in t)]
    for colors in history:
        h1 = Counter(colors[i] for i in side1)
        h2 = Counter(colors[i] for i in side2)
        if h1 != h2:
            return True
    return False


def distinguish_rounds(
    g1: DirectedGraph, g2: DirectedGraph, k: int, max_iters: int | None = None
) -> tuple[bool, int]:
    """distinguish() plus the number of refinement rounds examined."""
    union = disjoint_union(g1, g2)
    history, _ = refinement_history(union, k, max_iters)
    n1 = g1.node_count
    tuples = list(itertools.product(range(union.node_count), repeat=k))
    side1 = [i for i, t in enumerate(tuples) if all(x < n1 for x in t)]
    side2 = [i for i, t in enumerate(tuples) if all(x >= n1 for x in t)]
    for rnd, colors in enumerate(history):
        h1 = Counter(colors[i] for i in side1)
        h2 = Counter(colors[i] for i in side2)
        if h1 != h2:
            return True, rnd
    return False, len(history) - 1


def dump_colors(cm: ColorMap) -> str:
    """Text dump: ``tuple_idx<TAB>color`` lines plus a trailing histogram line."""
    lines = [f"{i}\t{c}" for i, c in enumerate(cm.colors)]
    hist = Counter(cm.colors)
    summary = ",".join(f"{color}:{count}" for color, count in sorted(hist.items()))
    lines.append(f"histogram\t{summary}")
    return "\n".join(lines) + "\n"
