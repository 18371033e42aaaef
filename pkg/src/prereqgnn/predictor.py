"""Siamese scoring head, cross-entropy training loop, and evaluation metrics.

The head encodes both node representations with one shared MLP and scores the
ordered pair through a single linear row over
[e_p : e_q : e_p - e_q : e_p (*) e_q : 1] followed by a sigmoid. The ordered
blocks (first, second, signed difference) let the model represent asymmetric
relations; the Hadamard block carries the symmetric interaction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConfigError, DivergenceError, ShapeError
from .gnn import (
    ModelState,
    MlpParams,
    TupleGraphBundle,
    _backward_cached,
    _forward_cached,
    glorot,
    init_mlp,
    init_model,
    mlp_backward,
    mlp_forward,
    prepare,
)
from .graph import DirectedGraph, LabeledPairSet, sample_negatives

PROB_EPS = 1e-12


@dataclass
class SiameseParams:
    """Shared pair encoder plus the scoring row (length 4 * enc_out + 1)."""

    encoder: MlpParams
    score_row: np.ndarray

    def parameters(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for l, (w, b) in enumerate(self.encoder.layers):
            out[f"encoder.{l}.weight"] = w
            out[f"encoder.{l}.bias"] = b
        out["score_row"] = self.score_row
        return out


@dataclass
class LinkModel:
    """Everything trainable: message passing plus the scoring head."""

    gnn: ModelState
    head: SiameseParams

    def parameters(self) -> dict[str, np.ndarray]:
        out = {f"gnn.{k}": v for k, v in self.gnn.parameters().items()}
        out.update({f"head.{k}": v for k, v in self.head.parameters().items()})
        return out


def init_head(
    seed: int,
    repr_dim: int,
    encoder_depth: int = 2,
    rng: np.random.Generator | None = None,
) -> SiameseParams:
    if rng is None:
        rng = np.random.default_rng(seed)
    encoder = init_mlp(rng, [repr_dim] * (encoder_depth + 1))
    width = 4 * repr_dim + 1
    score_row = glorot(rng, width, 1, (width,))
    return SiameseParams(encoder=encoder, score_row=score_row)


def init_link_model(
    seed: int,
    k: int,
    in_dim: int,
    hidden_dim: int = 64,
    repr_dim: int = 64,
    layer_count: int = 2,
    encoder_depth: int = 2,
) -> LinkModel:
    rng = np.random.default_rng(seed)
    gnn = init_model(seed, k, in_dim, hidden_dim, repr_dim, layer_count, rng=rng)
    head = init_head(seed, repr_dim, encoder_depth, rng=rng)
    return LinkModel(gnn=gnn, head=head)


@dataclass
class TrainConfig:
    learning_rate: float = 2e-5
    epochs: int = 4000
    batch_size: int = 256
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    threshold: float = 0.5
    negative_ratio: float = 1.0
    resample_negatives: bool = False

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        for name in ("adam_beta1", "adam_beta2"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1), got {v}")
        if self.adam_eps <= 0:
            raise ConfigError(f"adam_eps must be positive, got {self.adam_eps}")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.negative_ratio < 0:
            raise ConfigError(f"negative ratio must be >= 0, got {self.negative_ratio}")


@dataclass
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tn: int) -> "Metrics":
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return cls(tp=tp, fp=fp, fn=fn, tn=tn, precision=precision, recall=recall, f1=f1)


def pair_feature_vector(e_p: np.ndarray, e_q: np.ndarray) -> np.ndarray:
    """The scored feature layout: [e_p : e_q : e_p - e_q : e_p * e_q : 1]."""
    return np.concatenate([e_p, e_q, e_p - e_q, e_p * e_q, [1.0]])


def link_probability(f_p: np.ndarray, f_q: np.ndarray, params: SiameseParams) -> float:
    """Probability that the directed relation p -> q exists, in [eps, 1-eps]."""
    f_p = np.asarray(f_p, dtype=np.float64).reshape(1, -1)
    f_q = np.asarray(f_q, dtype=np.float64).reshape(1, -1)
    e_p, _ = mlp_forward(params.encoder, f_p)
    e_q, _ = mlp_forward(params.encoder, f_q)
    phi = pair_feature_vector(e_p[0], e_q[0])
    if phi.shape[0] != params.score_row.shape[0]:
        raise ShapeError(
            f"pair feature width {phi.shape[0]} != score row width {params.score_row.shape[0]}"
        )
    p = float(expit(phi @ params.score_row))
    return min(max(p, PROB_EPS), 1.0 - PROB_EPS)


def _score_pairs(
    node_repr: np.ndarray, pairs: list[tuple[int, int]], head: SiameseParams
) -> tuple[np.ndarray, dict]:
    src = np.fromiter((p for p, _ in pairs), dtype=np.intp, count=len(pairs))
    dst = np.fromiter((q for _, q in pairs), dtype=np.intp, count=len(pairs))
    ep, cache_p = mlp_forward(head.encoder, node_repr[src])
    eq, cache_q = mlp_forward(head.encoder, node_repr[dst])
    ones = np.ones((len(pairs), 1))
    phi = np.concatenate([ep, eq, ep - eq, ep * eq, ones], axis=1)
    z = phi @ head.score_row
    probs = expit(z)
    cache = {"src": src, "dst": dst, "ep": ep, "eq": eq, "phi": phi,
             "cache_p": cache_p, "cache_q": cache_q}
    return probs, cache


def _head_backward(
    head: SiameseParams, cache: dict, dz: np.ndarray, n_nodes: int
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Gradients of sum(dz * z) w.r.t. head parameters and node representations."""
    r = head.encoder.out_dim
    grads: dict[str, np.ndarray] = {"score_row": cache["phi"].T @ dz}
    dphi = np.outer(dz, head.score_row)
    dep = dphi[:, :r] + dphi[:, 2 * r : 3 * r] + dphi[:, 3 * r : 4 * r] * cache["eq"]
    deq = dphi[:, r : 2 * r] - dphi[:, 2 * r : 3 * r] + dphi[:, 3 * r : 4 * r] * cache["ep"]
    dfp, gp = mlp_backward(head.encoder, cache["cache_p"], dep)
    dfq, gq = mlp_backward(head.encoder, cache["cache_q"], deq)
    for l, ((dwp, dbp), (dwq, dbq)) in enumerate(zip(gp, gq)):
        grads[f"encoder.{l}.weight"] = dwp + dwq
        grads[f"encoder.{l}.bias"] = dbp + dbq
    dnode = np.zeros((n_nodes, dfp.shape[1]))
    np.add.at(dnode, cache["src"], dfp)
    np.add.at(dnode, cache["dst"], dfq)
    return grads, dnode


def bce_loss(probs, labels) -> float:
    """Mean binary cross-entropy; probabilities clamped away from {0, 1}."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if probs.size == 0:
        raise ConfigError("bce_loss needs at least one example")
    if probs.shape != labels.shape:
        raise ShapeError(f"probs shape {probs.shape} != labels shape {labels.shape}")
    p = np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.mean(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)))


class AdamOptimizer:
    """Adam with bias correction; moment state persists across steps."""

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8) -> None:
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_index = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    @classmethod
    def from_config(cls, config: TrainConfig) -> "AdamOptimizer":
        return cls(config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """Update parameter arrays in place from same-keyed gradients."""
        self.step_index += 1
        t = self.step_index
        for name, theta in params.items():
            g = grads[name]
            if g.shape != theta.shape:
                raise ShapeError(f"gradient for {name} has shape {g.shape}, want {theta.shape}")
            m = self._m.setdefault(name, np.zeros_like(theta))
            v = self._v.setdefault(name, np.zeros_like(theta))
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            theta -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainResult:
    model: LinkModel
    loss_history: list[float] = field(default_factory=list)


def _loss_and_grads(
    bundle: TupleGraphBundle,
    features: np.ndarray,
    model: LinkModel,
    batch: list[tuple[int, int, int]],
) -> tuple[float, dict[str, np.ndarray]]:
    node_repr, cache = _forward_cached(bundle, features, model.gnn)
    pairs = [(s, t) for s, t, _ in batch]
    labels = np.fromiter((y for _, _, y in batch), dtype=np.float64, count=len(batch))
    probs, head_cache = _score_pairs(node_repr, pairs, model.head)
    loss = bce_loss(probs, labels)
    # d(mean BCE)/dz for sigmoid outputs; the clamp only guards the loss value
    dz = (probs - labels) / len(batch)
    head_grads, dnode = _head_backward(model.head, head_cache, dz, node_repr.shape[0])
    gnn_grads, _ = _backward_cached(bundle, model.gnn, cache, dnode)
    grads = {f"gnn.{k}": v for k, v in gnn_grads.items()}
    grads.update({f"head.{k}": v for k, v in head_grads.items()})
    return loss, grads


def train(
    graph: DirectedGraph,
    features: np.ndarray,
    pair_set: LabeledPairSet,
    config: TrainConfig,
    k: int = 2,
    layer_count: int = 2,
    hidden_dim: int = 64,
    repr_dim: int = 64,
    encoder_depth: int = 2,
    threads: int = 1,
    bundle: TupleGraphBundle | None = None,
) -> TrainResult:
    """Mini-batched full-pipeline optimization; deterministic given the seed.

    Every step runs one full-graph message pass and scores one batch of pairs.
    Returns the trained model and the per-epoch mean loss.
    """
    train_pairs = pair_set.train
    if not train_pairs:
        raise ConfigError("training requires a non-empty train split")
    if bundle is None:
        bundle = prepare(graph, k, threads)
    model = init_link_model(
        config.seed, k, features.shape[1], hidden_dim, repr_dim, layer_count, encoder_depth
    )
    optimizer = AdamOptimizer.from_config(config)
    rng = np.random.default_rng(config.seed)
    params = model.parameters()

    positives = [(s, t) for s, t, y in train_pairs if y == 1]
    static_negatives = [(s, t, y) for s, t, y in train_pairs if y == 0]

    history: list[float] = []
    for epoch in range(config.epochs):
        if config.resample_negatives and positives and static_negatives:
            # exclude every true edge, not just the train positives, so fresh
            # negatives never collide with held-out positives
            edges = sorted(graph.edges)
            fresh = sample_negatives(
                graph, edges, seed=config.seed * 1_000_003 + epoch + 1,
                ratio=len(static_negatives) / len(edges),
            )[: len(static_negatives)]
            epoch_pairs = [(s, t, 1) for s, t in positives] + [(s, t, 0) for s, t in fresh]
        else:
            epoch_pairs = train_pairs
        order = rng.permutation(len(epoch_pairs))
        total = 0.0
        for start in range(0, len(epoch_pairs), config.batch_size):
            batch = [epoch_pairs[i] for i in order[start : start + config.batch_size]]
            loss, grads = _loss_and_grads(bundle, features, model, batch)
            if not math.isfinite(loss):
                raise DivergenceError(f"non-finite loss {loss} at epoch {epoch}")
            optimizer.step(params, grads)
            total += loss * len(batch)
        history.append(total / len(epoch_pairs))
    return TrainResult(model=model, loss_history=history)


def predict_pairs(
    model: LinkModel,
    bundle: TupleGraphBundle,
    features: np.ndarray,
    pairs: list[tuple[int, int]],
) -> np.ndarray:
    """Link probabilities for ordered pairs, clamped to [eps, 1-eps]."""
    node_repr = _forward_cached(bundle, features, model.gnn)[0]
    if not pairs:
        return np.zeros(0)
    probs, _ = _score_pairs(node_repr, pairs, model.head)
    return np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)


def evaluate(
    model: LinkModel,
    bundle: TupleGraphBundle,
    features: np.ndarray,
    pairs: list[tuple[int, int, int]],
    threshold: float = 0.5,
) -> Metrics:
    """Confusion counts and P/R/F1 at a decision threshold (positive iff p >= t)."""
    if not pairs:
        raise ConfigError("evaluation requires a non-empty pair list")
    probs = predict_pairs(model, bundle, features, [(s, t) for s, t, _ in pairs])
    labels = np.fromiter((y for _, _, y in pairs), dtype=np.int64, count=len(pairs))
    pred = probs >= threshold
    tp = int(np.sum(pred & (labels == 1)))
    fp = int(np.sum(pred & (labels == 0)))
    fn = int(np.sum(~pred & (labels == 1)))
    tn = int(np.sum(~pred & (labels == 0)))
    return Metrics.from_counts(tp, fp, fn, tn)


def threshold_sweep(
    model: LinkModel,
    bundle: TupleGraphBundle,
    features: np.ndarray,
    pairs: list[tuple[int, int, int]],
    thresholds: list[float],
) -> list[tuple[float, Metrics]]:
    """Diagnostic metrics at several thresholds, reusing one forward pass."""
    if not pairs:
        raise ConfigError("evaluation requires a non-empty pair list")
    probs = predict_pairs(model, bundle, features, [(s, t) for s, t, _ in pairs])
    labels = np.fromiter((y for _, _, y in pairs), dtype=np.int64, count=len(pairs))
    out = []
    for thr in thresholds:
        pred = probs >= thr
        out.append(
            (
                thr,
                Metrics.from_counts(
                    int(np.sum(pred & (labels == 1))),
                    int(np.sum(pred & (labels == 0))),
                    int(np.sum(~pred & (labels == 1))),
                    int(np.sum(~pred & (labels == 0))),
                ),
            )
        )
    return out
