"""Directed graph data model, dataset ingestion, splits, and negative sampling.

File formats:
  edge list   UTF-8 text, one ``source<TAB>target`` per line, ``#`` comments ignored
  embeddings  header ``N d``, then ``node_id v1 ... vd`` (whitespace separated)
  pair file   ``source<TAB>target`` with an optional third ``0``/``1`` label field
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, GraphDataError, SamplingExhaustedError

Pair = tuple[int, int]


@dataclass(frozen=True)
class DirectedGraph:
    """Immutable directed graph over string node identifiers.

    Internal indices are 0..N-1 in first-appearance order of the identifiers
    in the source edge list; all downstream determinism keys off this order.
    No self-loops, no duplicate edges.
    """

    node_ids: tuple[str, ...]
    edges: frozenset[Pair]
    out_adj: tuple[tuple[int, ...], ...]
    in_adj: tuple[tuple[int, ...], ...]

    @property
    def node_count(self) -> int:
        return len(self.node_ids)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def index(self) -> dict[str, int]:
        return {nid: i for i, nid in enumerate(self.node_ids)}

    @classmethod
    def from_edges(cls, node_ids: Sequence[str], edges: Iterable[Pair]) -> "DirectedGraph":
        node_ids = tuple(node_ids)
        n = len(node_ids)
        if n == 0:
            raise GraphDataError("graph has no nodes")
        if len(set(node_ids)) != n:
            raise GraphDataError("duplicate node identifiers")
        edge_set = frozenset(edges)
        out_lists: list[list[int]] = [[] for _ in range(n)]
        in_lists: list[list[int]] = [[] for _ in range(n)]
        for u, v in edge_set:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphDataError(f"edge ({u}, {v}) references an unknown node index")
            if u == v:
                raise GraphDataError(f"self-loop at node {node_ids[u]!r}")
            out_lists[u].append(v)
            in_lists[v].append(u)
        return cls(
            node_ids=node_ids,
            edges=edge_set,
            out_adj=tuple(tuple(sorted(a)) for a in out_lists),
            in_adj=tuple(tuple(sorted(a)) for a in in_lists),
        )


def load_edge_list(stream: Iterable[str] | str) -> DirectedGraph:
    """Parse an edge list into a DirectedGraph.

    Accepts an open text file, a list of lines, or a single string.
    Duplicate edge lines collapse to one edge; self-loops are rejected.
    """
    if isinstance(stream, str):
        stream = stream.splitlines()
    node_index: dict[str, int] = {}
    node_ids: list[str] = []
    edges: set[Pair] = set()
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise GraphDataError(
                f"edge list line {lineno}: expected 'source<TAB>target', got {len(fields)} fields"
            )
        src, dst = fields
        if not src or not dst:
            raise GraphDataError(f"edge list line {lineno}: empty node identifier")
        if src == dst:
            raise GraphDataError(f"edge list line {lineno}: self-loop on {src!r}")
        for nid in (src, dst):
            if nid not in node_index:
                node_index[nid] = len(node_ids)
                node_ids.append(nid)
        edges.add((node_index[src], node_index[dst]))
    if not node_ids:
        raise GraphDataError("edge list contains no edges")
    return DirectedGraph.from_edges(node_ids, edges)


def write_edge_list(graph: DirectedGraph) -> str:
    """Render a graph back to edge-list text.

    Edges are emitted in an order whose first-appearance sequence of node
    identifiers matches the graph's index order, so load_edge_list round-trips
    to an identical graph (including internal indices).
    """
    remaining = sorted(graph.edges)
    introduced = 0
    lines: list[str] = []
    while remaining:
        for pos, (u, v) in enumerate(remaining):
            new = [x for x in dict.fromkeys((u, v)) if x >= introduced]
            if new == list(range(introduced, introduced + len(new))):
                lines.append(f"{graph.node_ids[u]}\t{graph.node_ids[v]}")
                introduced += len(new)
                del remaining[pos]
                break
        else:
            # Not constructible by first-appearance indexing (e.g. hand-built
            # graphs with extra isolated nodes); emit the rest verbatim.
            lines.extend(f"{graph.node_ids[u]}\t{graph.node_ids[v]}" for u, v in remaining)
            break
    return "\n".join(lines) + "\n"


def load_embeddings(stream: Iterable[str] | str, graph: DirectedGraph) -> np.ndarray:
    """Load an embedding file and reorder rows to the graph's internal indices.

    Strict mode: every graph node needs a row, and every row must name a graph
    node. Returns a float64 matrix of shape (N, d) with finite entries.
    """
    if isinstance(stream, str):
        stream = stream.splitlines()
    it = iter(stream)
    try:
        header = next(it)
    except StopIteration:
        raise GraphDataError("embedding file is empty") from None
    parts = header.split()
    if len(parts) != 2:
        raise GraphDataError("embedding header must be 'N d'")
    try:
        rows, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise GraphDataError("embedding header must be 'N d' with integers") from None
    if rows <= 0 or dim <= 0:
        raise GraphDataError("embedding header counts must be positive")

    out = np.zeros((graph.node_count, dim), dtype=np.float64)
    seen: set[int] = set()
    count = 0
    for lineno, raw in enumerate(it, start=2):
        line = raw.strip()
        if not line:
            continue
        count += 1
        if count > rows:
            raise GraphDataError(f"embedding file has more than the declared {rows} rows")
        fields = line.split()
        nid = fields[0]
        idx = graph.index.get(nid)
        if idx is None:
            raise GraphDataError(f"embedding line {lineno}: unknown node {nid!r}")
        if idx in seen:
            raise GraphDataError(f"embedding line {lineno}: duplicate row for node {nid!r}")
        if len(fields) - 1 != dim:
            raise GraphDataError(
                f"embedding line {lineno}: expected {dim} values, got {len(fields) - 1}"
            )
        try:
            values = [float(x) for x in fields[1:]]
        except ValueError:
            raise GraphDataError(f"embedding line {lineno}: non-numeric value") from None
        if not all(math.isfinite(x) for x in values):
            raise GraphDataError(f"embedding line {lineno}: non-finite value for node {nid!r}")
        out[idx] = values
        seen.add(idx)
    if count != rows:
        raise GraphDataError(f"embedding file declares {rows} rows but contains {count}")
    missing = [graph.node_ids[i] for i in range(graph.node_count) if i not in seen]
    if missing:
        raise GraphDataError(f"missing embedding for node(s): {', '.join(missing[:5])}")
    return out


def write_embeddings(graph: DirectedGraph, features: np.ndarray) -> str:
    """Render a feature matrix in the embedding-file format."""
    rows, dim = features.shape
    lines = [f"{rows} {dim}"]
    for i in range(rows):
        vals = " ".join(f"{x:.17g}" for x in features[i])
        lines.append(f"{graph.node_ids[i]} {vals}")
    return "\n".join(lines) + "\n"


def load_pairs(stream: Iterable[str] | str, graph: DirectedGraph) -> list[tuple[int, int, int | None]]:
    """Parse a pair file into (source, target, label) index triples.

    The label field is optional per line; None when absent.
    """
    if isinstance(stream, str):
        stream = stream.splitlines()
    out: list[tuple[int, int, int | None]] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise GraphDataError(f"pair file line {lineno}: expected 2 or 3 fields")
        src, dst = fields[0], fields[1]
        for nid in (src, dst):
            if nid not in graph.index:
                raise GraphDataError(f"pair file line {lineno}: unknown node {nid!r}")
        label: int | None = None
        if len(fields) == 3:
            if fields[2] not in ("0", "1"):
                raise GraphDataError(f"pair file line {lineno}: label must be 0 or 1")
            label = int(fields[2])
        out.append((graph.index[src], graph.index[dst], label))
    return out


@dataclass(frozen=True)
class LabeledPairSet:
    """Directed (source, target, label) examples with a train/test tag per pair."""

    pairs: tuple[tuple[int, int, int], ...]
    split: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.pairs) != len(self.split):
            raise ConfigError("pairs and split tags must align")
        labels: dict[Pair, int] = {}
        for (s, t, y), tag in zip(self.pairs, self.split):
            if y not in (0, 1):
                raise ConfigError(f"label must be 0 or 1, got {y}")
            if tag not in ("train", "test"):
                raise ConfigError(f"split tag must be train or test, got {tag!r}")
            if labels.get((s, t), y) != y:
                raise ConfigError(f"pair ({s}, {t}) appears with conflicting labels")
            labels[(s, t)] = y

    def subset(self, tag: str) -> list[tuple[int, int, int]]:
        return [p for p, t in zip(self.pairs, self.split) if t == tag]

    @property
    def train(self) -> list[tuple[int, int, int]]:
        return self.subset("train")

    @property
    def test(self) -> list[tuple[int, int, int]]:
        return self.subset("test")


def split_pairs(positives: Sequence[Pair], ratio: float = 0.8, seed: int = 0) -> LabeledPairSet:
    """Deterministically split positive pairs into train/test by a seeded shuffle.

    floor(ratio * len(positives)) pairs are tagged train, the rest test.
    """
    if not positives:
        raise ConfigError("positives must be non-empty")
    if not 0.0 < ratio < 1.0:
        raise ConfigError(f"split ratio must lie in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(positives))
    n_train = int(math.floor(ratio * len(positives)))
    pairs = []
    tags = []
    for rank, idx in enumerate(order):
        s, t = positives[idx]
        pairs.append((s, t, 1))
        tags.append("train" if rank < n_train else "test")
    return LabeledPairSet(tuple(pairs), tuple(tags))


def sample_negatives(
    graph: DirectedGraph,
    positives: Sequence[Pair],
    seed: int = 0,
    ratio: float = 1.0,
) -> list[Pair]:
    """Draw ceil(ratio * |positives|) negative pairs, deterministically.

    Half come from reversed positives (q, p) that are not themselves positive,
    half uniformly from ordered non-self pairs that are neither positive nor
    already sampled; for an odd total a seeded coin assigns the extra draw.
    A shortfall in the reversed bucket shifts to the uniform bucket.
    """
    if ratio < 0:
        raise ConfigError(f"negative ratio must be >= 0, got {ratio}")
    total = int(math.ceil(ratio * len(positives)))
    if total == 0:
        return []
    rng = np.random.default_rng(seed)
    pos = set(positives)
    n = graph.node_count

    want_rev = total // 2
    if total % 2 == 1 and rng.random() < 0.5:
        want_rev += 1
    rev_candidates = sorted({(q, p) for p, q in pos} - pos)
    n_rev = min(want_rev, len(rev_candidates))
    chosen: list[Pair] = []
    if n_rev > 0:
        picks = rng.permutation(len(rev_candidates))[:n_rev]
        chosen.extend(rev_candidates[i] for i in sorted(picks))

    n_rand = total - len(chosen)
    forbidden = pos | set(chosen)
    free = n * (n - 1) - len(forbidden)
    if n_rand > free:
        raise SamplingExhaustedError(
            f"need {n_rand} more negatives but only {free} ordered non-positive pairs remain"
        )
    attempts = 0
    cap = max(200 * n_rand, 1000)
    taken: set[Pair] = set(forbidden)
    while n_rand > 0 and attempts < cap:
        u = int(rng.integers(n))
        v = int(rng.integers(n))
        attempts += 1
        if u == v or (u, v) in taken:
            continue
        chosen.append((u, v))
        taken.add((u, v))
        n_rand -= 1
    if n_rand > 0:
        # Dense regime: enumerate the free space and draw without replacement.
        pool = [(u, v) for u in range(n) for v in range(n) if u != v and (u, v) not in taken]
        picks = rng.permutation(len(pool))[:n_rand]
        chosen.extend(pool[i] for i in sorted(picks))
    return chosen


def assemble_dataset(
    graph: DirectedGraph,
    split_ratio: float = 0.8,
    negative_ratio: float = 1.0,
    seed: int = 0,
) -> LabeledPairSet:
    """Build the experiment pair set from a graph: split positives, add negatives.

    Positives are the graph's edges (sorted for determinism); negatives are
    sampled once and split with the same ratio.
    """
    positives = sorted(graph.edges)
    pos_set = split_pairs(positives, ratio=split_ratio, seed=seed)
    negatives = sample_negatives(graph, positives, seed=seed + 1, ratio=negative_ratio)
    pairs = list(pos_set.pairs)
    tags = list(pos_set.split)
    if negatives:
        rng = np.random.default_rng(seed + 2)
        order = rng.permutation(len(negatives))
        n_train = int(math.floor(split_ratio * len(negatives)))
        for rank, idx in enumerate(order):
            s, t = negatives[idx]
            pairs.append((s, t, 0))
            tags.append("train" if rank < n_train else "test")
    return LabeledPairSet(tuple(pairs), tuple(tags))
