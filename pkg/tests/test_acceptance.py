"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines live.
The scaled experiment uses the synthetic courses-like dataset unless
PREREQGNN_COURSES_DIR points at a directory with ``edges.tsv`` and
``embeddings.txt``; then those files are used with the same protocol.
"""

import os
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from prereqgnn import (
    DirectedGraph,
    build_position_graph,
    cli,
    distinguish,
    enumerate_tuples,
    evaluate,
    forward,
    load_edge_list,
    load_embeddings,
    prepare,
    train,
    write_edge_list,
    write_embeddings,
)
from prereqgnn.graph import assemble_dataset
from prereqgnn.predictor import TrainConfig, _loss_and_grads, init_link_model

from conftest import directed_cycle, two_triangles
from oracles import (
    brute_force_distinguish,
    brute_force_position_arcs,
    brute_force_tuples,
    central_difference,
    random_digraph,
    relative_error,
)
from synthetic import make_cluster_dataset, make_courses_dataset


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


def make_graph(n: int, edges) -> DirectedGraph:
    return DirectedGraph.from_edges([f"n{i}" for i in range(n)], edges)


def test_tuple_oracle_equivalence():
    with criterion("tuple-oracle-equivalence"):
        start = time.perf_counter()
        rng = np.random.default_rng(20240901)
        for trial in range(100):
            n = int(rng.integers(1, 8))
            edges = random_digraph(rng, n, 0.3)
            g = make_graph(n, edges)
            for k in (2, 3):
                ts = enumerate_tuples(g, k)
                assert list(ts.tuples) == brute_force_tuples(n, edges, k)
                for j in range(1, k + 1):
                    pg = build_position_graph(g, ts, j)
                    assert set(pg.arcs) == brute_force_position_arcs(
                        n, edges, list(ts.tuples), j
                    )
        assert time.perf_counter() - start < 10.0


def test_wl_discrimination_fixture():
    with criterion("wl-discrimination-fixture"):
        start = time.perf_counter()
        c6 = directed_cycle(6)
        c33 = two_triangles()
        assert distinguish(c6, c33, 1) is False
        assert distinguish(c6, c33, 2) is True
        e6 = sorted(c6.edges)
        e33 = sorted(c33.edges)
        assert brute_force_distinguish(6, e6, 6, e33, 1) is False
        assert brute_force_distinguish(6, e6, 6, e33, 2) is True
        assert time.perf_counter() - start < 1.0


def test_wl_soundness():
    with criterion("wl-soundness"):
        start = time.perf_counter()
        rng = np.random.default_rng(7777)
        for trial in range(50):
            n = int(rng.integers(2, 8))
            edges = random_digraph(rng, n, 0.35)
            g = make_graph(n, edges)
            perm = list(rng.permutation(n))
            ids = [None] * n
            for old, new in enumerate(perm):
                ids[new] = g.node_ids[old]
            h = DirectedGraph.from_edges(ids, [(perm[u], perm[v]) for u, v in edges])
            for k in (1, 2):
                assert distinguish(g, h, k) is False
        assert time.perf_counter() - start < 30.0


def test_gradient_correctness():
    with criterion("gradient-correctness"):
        start = time.perf_counter()
        g = load_edge_list(["a\tb", "b\tc", "c\ta", "a\td", "d\te", "e\tf", "b\te"])
        assert g.node_count == 6
        rng = np.random.default_rng(2718)
        feats = rng.normal(size=(6, 5))
        bundle = prepare(g, 2)
        model = init_link_model(31, k=2, in_dim=5, hidden_dim=8, repr_dim=8,
                                layer_count=2)
        batch = [(0, 1, 1), (1, 0, 0), (2, 4, 0), (3, 4, 1), (5, 0, 1), (4, 2, 0)]
        _, grads = _loss_and_grads(bundle, feats, model, batch)
        for name, arr in model.parameters().items():
            coords = rng.choice(arr.size, size=min(10, arr.size), replace=False)
            for idx in coords:
                numeric = central_difference(
                    lambda: _loss_and_grads(bundle, feats, model, batch)[0],
                    arr, int(idx), eps=1e-5,
                )
                analytic = grads[name].reshape(-1)[int(idx)]
                assert relative_error(numeric, analytic) < 1e-5, (
                    f"{name}[{idx}]: numeric={numeric} analytic={analytic}"
                )
        assert time.perf_counter() - start < 30.0


def test_permutation_equivariance():
    with criterion("permutation-equivariance"):
        g = load_edge_list(
            ["a\tb", "b\tc", "c\ta", "a\td", "d\te", "e\tf", "b\te", "f\tg", "g\ta"]
        )
        rng = np.random.default_rng(515)
        feats = rng.normal(size=(g.node_count, 5))
        model = init_link_model(8, k=2, in_dim=5, hidden_dim=8, repr_dim=6).gnn
        base = forward(prepare(g, 2), feats, model)
        for _ in range(20):
            perm = rng.permutation(g.node_count)
            ids = [None] * g.node_count
            for old, new in enumerate(perm):
                ids[new] = g.node_ids[old]
            g2 = DirectedGraph.from_edges(ids, [(perm[u], perm[v]) for u, v in g.edges])
            feats2 = np.empty_like(feats)
            feats2[perm] = feats
            out2 = forward(prepare(g2, 2), feats2, model)
            assert np.max(np.abs(out2[perm] - base)) < 1e-6


def test_overfit_sanity():
    with criterion("overfit-sanity"):
        start = time.perf_counter()
        graph, feats = make_cluster_dataset(seed=3)
        assert graph.node_count == 30
        assert graph.edge_count == 40
        pair_set = assemble_dataset(graph, split_ratio=0.8, negative_ratio=1.0, seed=3)
        result = train(graph, feats, pair_set, TrainConfig(epochs=500))
        bundle = prepare(graph, 2)
        train_metrics = evaluate(result.model, bundle, feats, pair_set.train, 0.5)
        test_metrics = evaluate(result.model, bundle, feats, pair_set.test, 0.5)
        assert train_metrics.f1 == 1.0
        assert test_metrics.f1 >= 0.9
        assert time.perf_counter() - start < 120.0


def test_cmd_train_determinism(tmp_path):
    with criterion("cmd-train-determinism"):
        graph, feats = make_cluster_dataset(seed=2)
        edges = tmp_path / "edges.tsv"
        emb = tmp_path / "emb.txt"
        edges.write_text(write_edge_list(graph), encoding="utf-8")
        emb.write_text(write_embeddings(graph, feats), encoding="utf-8")
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            rc = cli.main([
                "train", "--edges", str(edges), "--embeddings", str(emb),
                "--out-dir", str(out), "--epochs", "25", "--hidden-dim", "16",
                "--repr-dim", "16", "--seed", "77",
            ])
            assert rc == 0
            outs.append(out)
        assert (outs[0] / "metrics.tsv").read_bytes() == (outs[1] / "metrics.tsv").read_bytes()
        assert (outs[0] / "loss.csv").read_bytes() == (outs[1] / "loss.csv").read_bytes()


def _lr_concat_baseline(feats, pair_set, seed: int) -> float:
    from sklearn.linear_model import LogisticRegression
    from sklearn.metrics import f1_score

    tr, te = pair_set.train, pair_set.test
    x_tr = np.hstack([feats[[s for s, _, _ in tr]], feats[[t for _, t, _ in tr]]])
    x_te = np.hstack([feats[[s for s, _, _ in te]], feats[[t for _, t, _ in te]]])
    clf = LogisticRegression(max_iter=2000, random_state=seed)
    clf.fit(x_tr, [y for _, _, y in tr])
    return float(f1_score([y for _, _, y in te], clf.predict(x_te)))


def _load_real_courses(root: Path):
    with (root / "edges.tsv").open(encoding="utf-8") as fh:
        graph = load_edge_list(fh)
    with (root / "embeddings.txt").open(encoding="utf-8") as fh:
        feats = load_embeddings(fh, graph)
    return graph, feats


def test_scaled_experiment():
    with criterion("scaled-experiment"):
        real_dir = os.environ.get("PREREQGNN_COURSES_DIR")
        for seed in (0, 1, 2):
            if real_dir:
                graph, feats = _load_real_courses(Path(real_dir))
                epochs = 4000
            else:
                graph, feats = make_courses_dataset(seed)
                epochs = 1000
            assert feats.shape[1] >= 128
            pair_set = assemble_dataset(graph, split_ratio=0.8, negative_ratio=1.0,
                                        seed=seed)
            baseline = _lr_concat_baseline(feats, pair_set, seed)
            config = TrainConfig(epochs=epochs, batch_size=512, seed=seed)
            assert config.learning_rate == 2e-5
            result = train(graph, feats, pair_set, config, k=2,
                           hidden_dim=64, repr_dim=64)
            bundle = prepare(graph, 2)
            metrics = evaluate(result.model, bundle, feats, pair_set.test, 0.5)
            print(f"  seed={seed} gnn_f1={metrics.f1:.4f} lr_f1={baseline:.4f}")
            assert metrics.f1 > baseline
