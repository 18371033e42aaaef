"""Synthetic dataset builders for experiments and the acceptance suite.

Two generators:

* ``make_cluster_dataset`` - 30 nodes in two embedding clusters with directed
  edges cluster1 -> cluster2 only; a linear rule on the pair features
  suffices, so a healthy trainer should reach perfect training F1.
* ``make_courses_dataset`` - a university-courses-like layout: concepts carry
  a level and a topic, prerequisites flow to the next level mostly within
  topic, and embeddings encode topic/level noisily. True prerequisites leave
  a trace of the source embedding in the target (as shared terminology does
  in real course text), which is invisible to a linear model on concatenated
  embeddings but available to pair-interaction scorers.

Run as a script to write edge-list and embedding files for the CLI.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from prereqgnn import DirectedGraph, write_edge_list, write_embeddings


def make_cluster_dataset(
    seed: int,
    n1: int = 15,
    n2: int = 15,
    n_edges: int = 40,
    dim: int = 32,
    sep: float = 2.0,
    noise: float = 1.0,
    link: float = 1.5,
    scale: float = 2.0,
) -> tuple[DirectedGraph, np.ndarray]:
    """Two separated clusters; edges sampled uniformly from cluster1 x cluster2."""
    rng = np.random.default_rng(seed)
    n = n1 + n2
    if n_edges < max(n1, n2) or n_edges > n1 * n2:
        raise ValueError("n_edges cannot cover every node exactly once")
    ids = [f"c{i}" for i in range(n)]
    # cover every node so the graph survives an edge-list round trip
    edges = {(u, int(rng.integers(n1, n))) for u in range(n1)}
    for v in range(n1, n):
        if not any(e[1] == v for e in edges):
            edges.add((int(rng.integers(0, n1)), v))
    while len(edges) < n_edges:
        edges.add((int(rng.integers(0, n1)), int(rng.integers(n1, n))))
    edges = sorted(edges)
    base = rng.normal(scale=noise, size=(n, dim))
    base[:n1, 0] += sep
    base[n1:, 0] -= sep
    feats = base.copy()
    for u, v in edges:
        feats[v] += link * base[u]
    return DirectedGraph.from_edges(ids, edges), feats * scale


def make_courses_dataset(
    seed: int,
    n_nodes: int = 220,
    n_levels: int = 6,
    n_topics: int = 5,
    dim: int = 128,
    out_degree: float = 2.2,
    noise: float = 1.0,
    trace: float = 0.8,
) -> tuple[DirectedGraph, np.ndarray]:
    """Hierarchical prerequisite graph with noisy level/topic embeddings."""
    rng = np.random.default_rng(seed)
    levels = rng.integers(0, n_levels, size=n_nodes)
    topics = rng.integers(0, n_topics, size=n_nodes)
    level_dir = rng.normal(size=dim) / np.sqrt(dim) * 3.0
    topic_centroids = rng.normal(size=(n_topics, dim)) * 0.8
    edges: set[tuple[int, int]] = set()
    for u in range(n_nodes):
        cands = [
            v
            for v in range(n_nodes)
            if levels[v] == levels[u] + 1 and (topics[v] == topics[u] or rng.random() < 0.2)
        ]
        rng.shuffle(cands)
        for v in cands[: max(1, int(rng.poisson(out_degree)))]:
            edges.add((u, v))
    base = (
        topic_centroids[topics]
        + np.outer(levels, level_dir)
        + rng.normal(scale=noise, size=(n_nodes, dim))
    )
    feats = base.copy()
    for u, v in sorted(edges):
        feats[v] += trace * base[u]
    # drop isolated nodes: the edge-list format cannot express them
    used = sorted({x for e in edges for x in e})
    remap = {old: new for new, old in enumerate(used)}
    edges = sorted((remap[u], remap[v]) for u, v in edges)
    ids = [f"course{i}" for i in used]
    return DirectedGraph.from_edges(ids, edges), feats[used]


def write_dataset(graph: DirectedGraph, feats: np.ndarray, out_dir: Path, name: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{name}.edges.tsv").write_text(write_edge_list(graph), encoding="utf-8")
    (out_dir / f"{name}.emb.txt").write_text(write_embeddings(graph, feats), encoding="utf-8")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--kind", choices=["clusters", "courses"], default="courses")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", type=Path, default=Path("data"))
    parser.add_argument("--name", default=None)
    args = parser.parse_args()
    if args.kind == "clusters":
        graph, feats = make_cluster_dataset(args.seed)
    else:
        graph, feats = make_courses_dataset(args.seed)
    name = args.name or f"{args.kind}_seed{args.seed}"
    write_dataset(graph, feats, args.out_dir, name)
    print(f"wrote {name}: N={graph.node_count} E={graph.edge_count} d={feats.shape[1]}")


if __name__ == "__main__":
    main()
