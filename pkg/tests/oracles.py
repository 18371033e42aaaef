"""Independent brute-force oracles the library implementations are checked against.

Everything here is written the slow, obvious way on purpose: exhaustive
filters, dict-based refinement, dense matrix arithmetic with explicit loops.
None of it shares code with the package.
"""

from __future__ import annotations

import itertools
from collections import Counter

import numpy as np


def random_digraph(rng: np.random.Generator, n: int, p: float) -> list[tuple[int, int]]:
    """Ordered non-self pairs kept with probability p."""
    return [
        (u, v) for u in range(n) for v in range(n) if u != v and rng.random() < p
    ]


def out_neighbors(n: int, edges: list[tuple[int, int]]) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
    return adj


def brute_force_tuples(n: int, edges: list[tuple[int, int]], k: int) -> list[tuple[int, ...]]:
    """Filter the full k-fold product by the admission predicate."""
    adj = out_neighbors(n, edges)

    def admitted(tup: tuple[int, ...]) -> bool:
        for i in range(1, len(tup)):
            if not any(tup[i] in adj[tup[j]] or tup[i] == tup[j] for j in range(i)):
                return False
        return True

    return [t for t in itertools.product(range(n), repeat=k) if admitted(t)]


def brute_force_position_arcs(
    n: int, edges: list[tuple[int, int]], tuples: list[tuple[int, ...]], j: int
) -> set[tuple[int, int]]:
    """All single-position substitutions into an out-neighbor, j 1-based."""
    adj = out_neighbors(n, edges)
    index = {t: i for i, t in enumerate(tuples)}
    arcs = set()
    for src, tup in enumerate(tuples):
        for w in range(n):
            if w not in adj[tup[j - 1]]:
                continue
            cand = tup[: j - 1] + (w,) + tup[j:]
            if cand in index:
                arcs.add((src, index[cand]))
    return arcs


def _atomic(tup: tuple[int, ...], eset: set[tuple[int, int]]) -> tuple:
    k = len(tup)
    return tuple(
        tuple(
            2 if tup[i] == tup[j] else (1 if (tup[i], tup[j]) in eset else 0)
            for j in range(k)
        )
        for i in range(k)
    )


def brute_force_refinement(
    n: int, edges: list[tuple[int, int]], k: int, max_iters: int = 200
) -> list[dict[tuple[int, ...], int]]:
    """Dict-based tuple color refinement; returns every round's coloring.

    k=1 relabels nodes by out-neighbor color multisets; k>=2 relabels each
    tuple of the full product by the multiset over substitution vertices of
    the per-position color vectors.
    """
    eset = set(edges)
    adj = out_neighbors(n, edges)
    tuples = list(itertools.product(range(n), repeat=k))
    table: dict = {}

    def dense(sigs: list) -> list[int]:
        out = []
        for s in sigs:
            if s not in table:
                table[s] = len(table)
            out.append(table[s])
        remap: dict[int, int] = {}
        for c in out:
            if c not in remap:
                remap[c] = len(remap)
        return [remap[c] for c in out]

    colors = dense([("atom", _atomic(t, eset)) for t in tuples])
    history = [dict(zip(tuples, colors))]
    cmap = history[-1]
    for _ in range(max_iters):
        sigs = []
        for tup in tuples:
            if k == 1:
                agg = tuple(sorted(cmap[(w,)] for w in adj[tup[0]]))
            else:
                rows = []
                for v in range(n):
                    rows.append(
                        tuple(cmap[tup[:j] + (v,) + tup[j + 1 :]] for j in range(k))
                    )
                agg = tuple(sorted(rows))
            sigs.append(("round", cmap[tup], agg))
        new = dense(sigs)
        new_map = dict(zip(tuples, new))
        if new_map == cmap:
            return history
        cmap = new_map
        history.append(cmap)
    return history


def brute_force_distinguish(
    n1: int, e1: list[tuple[int, int]], n2: int, e2: list[tuple[int, int]], k: int
) -> bool:
    """Refine the disjoint union; compare per-side histograms every round."""
    edges = list(e1) + [(u + n1, v + n1) for u, v in e2]
    history = brute_force_refinement(n1 + n2, edges, k)
    for cmap in history:
        h1 = Counter(c for t, c in cmap.items() if all(x < n1 for x in t))
        h2 = Counter(c for t, c in cmap.items() if all(x >= n1 for x in t))
        if h1 != h2:
            return True
    return False


def dense_mlp(layers: list[tuple[np.ndarray, np.ndarray]], x: np.ndarray) -> np.ndarray:
    h = x
    for i, (w, b) in enumerate(layers):
        h = h @ w + b
        if i < len(layers) - 1:
            h = np.where(h > 0, h, 0.0)
    return h


def dense_normalized_adjacency(arcs: set[tuple[int, int]], size: int) -> np.ndarray:
    a = np.zeros((size, size))
    for u, v in arcs:
        a[u, v] = 1.0
        a[v, u] = 1.0
    a = a + np.eye(size)
    dinv = 1.0 / np.sqrt(a.sum(axis=1))
    return dinv[:, None] * a * dinv[None, :]


def dense_forward_oracle(
    n: int,
    edges: list[tuple[int, int]],
    node_feats: np.ndarray,
    model,
) -> np.ndarray:
    """Straight-line dense re-implementation of the whole message-passing stack."""
    k = model.k
    tuples = brute_force_tuples(n, edges, k)
    size = len(tuples)
    adjs = [
        dense_normalized_adjacency(brute_force_position_arcs(n, edges, tuples, j), size)
        for j in range(1, k + 1)
    ]
    z = np.array([np.concatenate([node_feats[s] for s in tup]) for tup in tuples])
    for t in range(model.layer_count):
        per_pos = []
        for j in range(k):
            pre = adjs[j] @ z @ model.gcn[t][j].weight + model.gcn[t][j].bias
            per_pos.append(np.where(pre > 0, pre, 0.0))
        z = dense_mlp(model.fusion[t].layers, np.concatenate(per_pos, axis=1))
    pooled = []
    for i in range(k):
        x = np.zeros((n, z.shape[1]))
        for v in range(n):
            members = [r for r, tup in enumerate(tuples) if tup[i] == v]
            if members:
                x[v] = z[sorted(members)].sum(axis=0) / len(members)
        pooled.append(x)
    return dense_mlp(model.node_mlp.layers, np.concatenate(pooled, axis=1))


def central_difference(f, array: np.ndarray, flat_index: int, eps: float = 1e-5) -> float:
    flat = array.reshape(-1)
    orig = flat[flat_index]
    flat[flat_index] = orig + eps
    plus = f()
    flat[flat_index] = orig - eps
    minus = f()
    flat[flat_index] = orig
    return (plus - minus) / (2.0 * eps)


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-10)
