"""Higher-order message passing over position graphs.

Pipeline: concatenated node embeddings per tuple -> T rounds of {one GCN per
position graph, outputs fused by an MLP} -> mean-pooling of tuple features
back to nodes per position -> node readout MLP. Gradients for every parameter
and for the input features are hand-derived reverse-mode for this fixed
architecture; there is no generic autodiff here.

GCN normalization treats each position graph as undirected: the arc set is
symmetrized, self-loops added, then degree-normalized on both sides.
Directionality lives in which tuples and arcs exist at all.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ShapeError
from .graph import DirectedGraph
from .tuples import (
    PositionGraph,
    TupleSet,
    build_position_graphs,
    enumerate_tuples,
    initial_tuple_features,
)


@dataclass
class GcnLayerParams:
    weight: np.ndarray  # (in_dim, out_dim)
    bias: np.ndarray  # (out_dim,)


@dataclass
class MlpParams:
    """Linear layers with a rectifier between (not after) them."""

    layers: list[tuple[np.ndarray, np.ndarray]]

    @property
    def in_dim(self) -> int:
        return self.layers[0][0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.layers[-1][0].shape[1]


@dataclass
class ModelState:
    """All learnable message-passing parameters plus the dimension chain."""

    gcn: list[list[GcnLayerParams]]  # [layer][position]
    fusion: list[MlpParams]  # one per layer
    node_mlp: MlpParams
    rng_seed: int
    k: int
    in_dim: int  # node embedding width d
    hidden_dim: int
    out_dim: int
    layer_count: int

    def parameters(self) -> dict[str, np.ndarray]:
        """Live parameter arrays keyed by stable names, in a fixed order."""
        out: dict[str, np.ndarray] = {}
        for t, layer in enumerate(self.gcn):
            for j, p in enumerate(layer):
                out[f"gcn.{t}.{j}.weight"] = p.weight
                out[f"gcn.{t}.{j}.bias"] = p.bias
        for t, mlp in enumerate(self.fusion):
            for l, (w, b) in enumerate(mlp.layers):
                out[f"fusion.{t}.{l}.weight"] = w
                out[f"fusion.{t}.{l}.bias"] = b
        for l, (w, b) in enumerate(self.node_mlp.layers):
            out[f"node_mlp.{l}.weight"] = w
            out[f"node_mlp.{l}.bias"] = b
        return out


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape: tuple) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_mlp(rng: np.random.Generator, dims: list[int]) -> MlpParams:
    # biases share the layer's fan bounds; nonzero bias init keeps dead-row
    # pre-activations off the exact rectifier kink
    layers = []
    for a, b in zip(dims, dims[1:]):
        layers.append((glorot(rng, a, b, (a, b)), glorot(rng, a, b, (b,))))
    return MlpParams(layers=layers)


def init_model(
    seed: int,
    k: int,
    in_dim: int,
    hidden_dim: int = 64,
    out_dim: int = 64,
    layer_count: int = 2,
    rng: np.random.Generator | None = None,
) -> ModelState:
    """Seeded Glorot-uniform weights, zero biases, fixed draw order."""
    if rng is None:
        rng = np.random.default_rng(seed)
    gcn: list[list[GcnLayerParams]] = []
    for t in range(layer_count):
        width_in = k * in_dim if t == 0 else hidden_dim
        layer = [
            GcnLayerParams(
                weight=glorot(rng, width_in, hidden_dim, (width_in, hidden_dim)),
                bias=glorot(rng, width_in, hidden_dim, (hidden_dim,)),
            )
            for _ in range(k)
        ]
        gcn.append(layer)
    fusion = [init_mlp(rng, [k * hidden_dim, hidden_dim, hidden_dim]) for _ in range(layer_count)]
    node_mlp = init_mlp(rng, [k * hidden_dim, hidden_dim, out_dim])
    return ModelState(
        gcn=gcn,
        fusion=fusion,
        node_mlp=node_mlp,
        rng_seed=seed,
        k=k,
        in_dim=in_dim,
        hidden_dim=hidden_dim,
        out_dim=out_dim,
        layer_count=layer_count,
    )


def mlp_forward(params: MlpParams, x: np.ndarray) -> tuple[np.ndarray, list]:
    """Apply the MLP; cache per-layer inputs and pre-activations for backward."""
    if x.shape[1] != params.in_dim:
        raise ShapeError(f"MLP expects input width {params.in_dim}, got {x.shape[1]}")
    cache = []
    h = x
    last = len(params.layers) - 1
    for i, (w, b) in enumerate(params.layers):
        z = h @ w + b
        cache.append((h, z))
        h = np.maximum(z, 0.0) if i < last else z
    return h, cache


def mlp_backward(
    params: MlpParams, cache: list, dout: np.ndarray
) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """Gradients of <dout, mlp(x)> w.r.t. input and each (weight, bias)."""
    grads: list[tuple[np.ndarray, np.ndarray] | None] = [None] * len(params.layers)
    last = len(params.layers) - 1
    dh = dout
    for i in range(last, -1, -1):
        w, _ = params.layers[i]
        x, z = cache[i]
        dz = dh if i == last else dh * (z > 0.0)
        grads[i] = (x.T @ dz, dz.sum(axis=0))
        dh = dz @ w.T
    return dh, grads  # type: ignore[return-value]


def normalized_adjacency(pg: PositionGraph, size: int) -> sp.csr_array:
    """Symmetrize the arc set, add self-loops, degree-normalize both sides."""
    if pg.arcs:
        src = np.fromiter((u for u, _ in pg.arcs), dtype=np.intp)
        dst = np.fromiter((v for _, v in pg.arcs), dtype=np.intp)
        rows = np.concatenate([src, dst])
        cols = np.concatenate([dst, src])
        a = sp.coo_array((np.ones(len(rows)), (rows, cols)), shape=(size, size)).tocsr()
        a.sum_duplicates()
        a.data[:] = 1.0  # u<->v entered once even if both arc directions exist
    else:
        a = sp.csr_array((size, size))
    a = a + sp.eye_array(size, format="csr")
    deg = np.asarray(a.sum(axis=1)).ravel()
    dinv = 1.0 / np.sqrt(deg)
    return a.multiply(dinv[:, None]).multiply(dinv[None, :]).tocsr()


def pooling_matrix(tuples: TupleSet, node_count: int, position: int) -> sp.csr_array:
    """N x |tuples| averaging matrix for one tuple position (0-based).

    Rows of nodes never occurring at this position are all zero, so pooling
    yields a zero vector instead of a division by zero.
    """
    col = np.fromiter((t[position] for t in tuples.tuples), dtype=np.intp, count=len(tuples))
    counts = np.bincount(col, minlength=node_count)
    data = 1.0 / counts[col]
    rows = col
    cols = np.arange(len(tuples), dtype=np.intp)
    return sp.csr_array((data, (rows, cols)), shape=(node_count, len(tuples)))


@dataclass
class TupleGraphBundle:
    """Precomputed structural operators shared by every forward/backward pass."""

    graph: DirectedGraph
    tuples: TupleSet
    position_graphs: list[PositionGraph]
    norm_adj: list[sp.csr_array]
    pool: list[sp.csr_array]
    pool_t: list[sp.csr_array]
    pos_cols: list[np.ndarray]
    threads: int = 1

    @classmethod
    def build(
        cls,
        graph: DirectedGraph,
        tuples: TupleSet,
        position_graphs: list[PositionGraph],
        threads: int = 1,
    ) -> "TupleGraphBundle":
        size = len(tuples)
        norm_adj = [normalized_adjacency(pg, size) for pg in position_graphs]
        pool = [pooling_matrix(tuples, graph.node_count, i) for i in range(tuples.k)]
        pool_t = [m.T.tocsr() for m in pool]
        pos_cols = [
            np.fromiter((t[i] for t in tuples.tuples), dtype=np.intp, count=size)
            for i in range(tuples.k)
        ]
        return cls(graph, tuples, position_graphs, norm_adj, pool, pool_t, pos_cols, threads)

    @property
    def k(self) -> int:
        return self.tuples.k


def prepare(graph: DirectedGraph, k: int, threads: int = 1) -> TupleGraphBundle:
    """Enumerate tuples, build position graphs, and cache their operators."""
    tuples = enumerate_tuples(graph, k)
    pgs = build_position_graphs(graph, tuples)
    return TupleGraphBundle.build(graph, tuples, pgs, threads)


def gcn_forward(pg: PositionGraph, feats: np.ndarray, params: GcnLayerParams) -> np.ndarray:
    """One graph convolution: rectify(norm_adj @ feats @ weight + bias)."""
    if feats.shape[1] != params.weight.shape[0]:
        raise ShapeError(
            f"GCN expects input width {params.weight.shape[0]}, got {feats.shape[1]}"
        )
    adj = normalized_adjacency(pg, feats.shape[0])
    return np.maximum(adj @ feats @ params.weight + params.bias, 0.0)


def fuse(per_position: list[np.ndarray], fusion: MlpParams) -> np.ndarray:
    """Concatenate per-position tuple features and apply the fusion MLP."""
    shapes = {m.shape for m in per_position}
    if len(shapes) != 1:
        raise ShapeError(f"per-position features disagree on shape: {sorted(shapes)}")
    out, _ = mlp_forward(fusion, np.concatenate(per_position, axis=1))
    return out


def pool_to_nodes(
    tuple_feats: np.ndarray, tuples: TupleSet, graph: DirectedGraph
) -> list[np.ndarray]:
    """Average tuple features onto each node, once per tuple position."""
    if tuple_feats.shape[0] != len(tuples):
        raise ShapeError(
            f"tuple features have {tuple_feats.shape[0]} rows, expected {len(tuples)}"
        )
    return [
        pooling_matrix(tuples, graph.node_count, i) @ tuple_feats for i in range(tuples.k)
    ]


def node_readout(pooled: list[np.ndarray], node_mlp: MlpParams) -> np.ndarray:
    """Concatenate per-position node features and apply the readout MLP."""
    out, _ = mlp_forward(node_mlp, np.concatenate(pooled, axis=1))
    return out


def _check_bundle(bundle: TupleGraphBundle, node_features: np.ndarray, model: ModelState) -> None:
    n, d = node_features.shape
    if n != bundle.graph.node_count:
        raise ShapeError(f"feature rows {n} != node count {bundle.graph.node_count}")
    if d != model.in_dim:
        raise ShapeError(f"feature width {d} != model input width {model.in_dim}")
    if bundle.k != model.k:
        raise ShapeError(f"bundle order k={bundle.k} != model k={model.k}")


def _forward_cached(
    bundle: TupleGraphBundle, node_features: np.ndarray, model: ModelState
) -> tuple[np.ndarray, dict]:
    _check_bundle(bundle, node_features, model)
    k = model.k
    z = initial_tuple_features(bundle.tuples, node_features)
    cache: dict = {"z0": z, "gcn_ax": [], "gcn_pre": [], "fusion": []}

    def convolve(t: int, j: int, feats: np.ndarray):
        ax = bundle.norm_adj[j] @ feats
        pre = ax @ model.gcn[t][j].weight + model.gcn[t][j].bias
        return ax, pre

    executor = ThreadPoolExecutor(max_workers=bundle.threads) if bundle.threads > 1 else None
    try:
        for t in range(model.layer_count):
            if executor is not None:
                results = list(executor.map(lambda j: convolve(t, j, z), range(k)))
            else:
                results = [convolve(t, j, z) for j in range(k)]
            axs = [ax for ax, _ in results]
            pres = [pre for _, pre in results]
            acts = [np.maximum(p, 0.0) for p in pres]
            cache["gcn_ax"].append(axs)
            cache["gcn_pre"].append(pres)
            fused, fcache = mlp_forward(model.fusion[t], np.concatenate(acts, axis=1))
            cache["fusion"].append(fcache)
            z = fused
    finally:
        if executor is not None:
            executor.shutdown()

    pooled = [bundle.pool[i] @ z for i in range(k)]
    out, ncache = mlp_forward(model.node_mlp, np.concatenate(pooled, axis=1))
    cache["node_mlp"] = ncache
    return out, cache


def forward(
    bundle: TupleGraphBundle, node_features: np.ndarray, model: ModelState
) -> np.ndarray:
    """Node representations, shape (N, out_dim). Deterministic given the model."""
    out, _ = _forward_cached(bundle, node_features, model)
    return out


def _backward_cached(
    bundle: TupleGraphBundle,
    model: ModelState,
    cache: dict,
    upstream: np.ndarray,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    k = model.k
    h = model.hidden_dim
    grads: dict[str, np.ndarray] = {}

    d_pooled_cat, node_grads = mlp_backward(model.node_mlp, cache["node_mlp"], upstream)
    for l, (dw, db) in enumerate(node_grads):
        grads[f"node_mlp.{l}.weight"] = dw
        grads[f"node_mlp.{l}.bias"] = db

    width = model.node_mlp.in_dim // k
    dz = np.zeros((len(bundle.tuples), width))
    for i in range(k):
        dz += bundle.pool_t[i] @ d_pooled_cat[:, i * width : (i + 1) * width]

    for t in range(model.layer_count - 1, -1, -1):
        d_cat, fusion_grads = mlp_backward(model.fusion[t], cache["fusion"][t], dz)
        for l, (dw, db) in enumerate(fusion_grads):
            grads[f"fusion.{t}.{l}.weight"] = dw
            grads[f"fusion.{t}.{l}.bias"] = db
        in_width = model.gcn[t][0].weight.shape[0]
        dz_prev = np.zeros((len(bundle.tuples), in_width))
        for j in range(k):
            pre = cache["gcn_pre"][t][j]
            ax = cache["gcn_ax"][t][j]
            dp = d_cat[:, j * h : (j + 1) * h] * (pre > 0.0)
            grads[f"gcn.{t}.{j}.weight"] = ax.T @ dp
            grads[f"gcn.{t}.{j}.bias"] = dp.sum(axis=0)
            # norm_adj is symmetric, so its transpose is itself
            dz_prev += bundle.norm_adj[j] @ (dp @ model.gcn[t][j].weight.T)
        dz = dz_prev

    d = model.in_dim
    dfeat = np.zeros((bundle.graph.node_count, d))
    for i in range(k):
        np.add.at(dfeat, bundle.pos_cols[i], dz[:, i * d : (i + 1) * d])
    return grads, dfeat


def backward(
    bundle: TupleGraphBundle,
    node_features: np.ndarray,
    upstream: np.ndarray,
    model: ModelState,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Exact gradients of <upstream, forward(...)> for every parameter and input.

    Returns (parameter gradients keyed like ModelState.parameters(),
    gradient w.r.t. node_features).
    """
    out, cache = _forward_cached(bundle, node_features, model)
    if upstream.shape != out.shape:
        raise ShapeError(f"upstream shape {upstream.shape} != output shape {out.shape}")
    return _backward_cached(bundle, model, cache, upstream)
