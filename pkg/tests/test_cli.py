import numpy as np
import pytest

from prereqgnn import cli, load_checkpoint, write_edge_list, write_embeddings
from prereqgnn.predictor import init_link_model

from conftest import directed_cycle, two_triangles
from synthetic import make_cluster_dataset


def write_graph_files(tmp_path, seed=0, **kwargs):
    g, feats = make_cluster_dataset(seed, **kwargs)
    edges = tmp_path / "edges.tsv"
    emb = tmp_path / "emb.txt"
    edges.write_text(write_edge_list(g), encoding="utf-8")
    emb.write_text(write_embeddings(g, feats), encoding="utf-8")
    return g, feats, edges, emb


# -------------------------------------------------------------------- tuples


def test_cmd_tuples_fixture(tmp_path, capsys):
    edges = tmp_path / "e.tsv"
    edges.write_text("a\tb\n")
    rc = cli.main(["tuples", "--edges", str(edges), "--k", "2",
                   "--out-dir", str(tmp_path / "out")])
    assert rc == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "tuples=3"
    assert "G1 arcs=1" in out
    assert "G2 arcs=1" in out
    assert (tmp_path / "out" / "tuples.tsv").exists()
    assert (tmp_path / "out" / "position_graph_1.tsv").exists()
    assert (tmp_path / "out" / "position_graph_2.tsv").exists()


def test_cmd_tuples_k1(tmp_path, capsys):
    edges = tmp_path / "e.tsv"
    edges.write_text("a\tb\nb\tc\n")
    rc = cli.main(["tuples", "--edges", str(edges), "--k", "1",
                   "--out-dir", str(tmp_path / "out")])
    assert rc == 0
    assert capsys.readouterr().out.splitlines()[0] == "tuples=3"


def test_cmd_tuples_missing_file(tmp_path, capsys):
    missing = tmp_path / "nope.tsv"
    rc = cli.main(["tuples", "--edges", str(missing), "--k", "2",
                   "--out-dir", str(tmp_path / "out")])
    assert rc == 2
    assert str(missing) in capsys.readouterr().err


# ------------------------------------------------------------------------ wl


def write_cycle_files(tmp_path):
    p6 = tmp_path / "c6.tsv"
    p33 = tmp_path / "c33.tsv"
    p6.write_text(write_edge_list(directed_cycle(6)), encoding="utf-8")
    p33.write_text(write_edge_list(two_triangles()), encoding="utf-8")
    return p6, p33


def test_cmd_wl_identical(tmp_path, capsys):
    p6, _ = write_cycle_files(tmp_path)
    rc = cli.main(["wl", "--graph1", str(p6), "--graph2", str(p6), "--k", "2"])
    assert rc == 0
    assert capsys.readouterr().out.startswith("NOT-DISTINGUISHED")


def test_cmd_wl_cycles(tmp_path, capsys):
    p6, p33 = write_cycle_files(tmp_path)
    rc = cli.main(["wl", "--graph1", str(p6), "--graph2", str(p33), "--k", "1"])
    assert rc == 0
    assert capsys.readouterr().out.startswith("NOT-DISTINGUISHED")
    rc = cli.main(["wl", "--graph1", str(p6), "--graph2", str(p33), "--k", "2"])
    assert rc == 0
    assert capsys.readouterr().out.startswith("DISTINGUISHED")


# --------------------------------------------------------------------- train


def test_cmd_train_outputs(tmp_path, capsys):
    _, _, edges, emb = write_graph_files(tmp_path)
    out = tmp_path / "run"
    rc = cli.main(["train", "--edges", str(edges), "--embeddings", str(emb),
                   "--out-dir", str(out), "--epochs", "10", "--hidden-dim", "8",
                   "--repr-dim", "8", "--seed", "3"])
    assert rc == 0
    assert (out / "model.ckpt").exists()
    loss = (out / "loss.csv").read_text().splitlines()
    assert loss[0] == "epoch,mean_loss"
    assert len(loss) == 11
    metrics = (out / "metrics.tsv").read_text().splitlines()
    assert metrics[0].split("\t") == [
        "dataset", "precision", "recall", "f1", "tp", "fp", "fn", "tn", "threshold"
    ]
    assert len(metrics) == 2


def test_cmd_train_byte_identical(tmp_path):
    _, _, edges, emb = write_graph_files(tmp_path, seed=1)
    outs = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        rc = cli.main(["train", "--edges", str(edges), "--embeddings", str(emb),
                       "--out-dir", str(out), "--epochs", "8", "--hidden-dim", "8",
                       "--repr-dim", "8", "--seed", "11"])
        assert rc == 0
        outs.append(out)
    for fname in ("metrics.tsv", "loss.csv", "model.ckpt"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()


def test_cmd_train_zero_epochs_checkpoint_is_init(tmp_path):
    _, feats, edges, emb = write_graph_files(tmp_path, seed=2)
    out = tmp_path / "run"
    rc = cli.main(["train", "--edges", str(edges), "--embeddings", str(emb),
                   "--out-dir", str(out), "--epochs", "0", "--hidden-dim", "8",
                   "--repr-dim", "8", "--seed", "5"])
    assert rc == 0
    loaded = load_checkpoint(out / "model.ckpt")
    fresh = init_link_model(5, k=2, in_dim=feats.shape[1], hidden_dim=8, repr_dim=8)
    for name, arr in fresh.parameters().items():
        np.testing.assert_array_equal(arr, loaded.parameters()[name])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_cmd_train_divergence_exit_code(tmp_path, capsys):
    _, _, edges, emb = write_graph_files(tmp_path, seed=3)
    rc = cli.main(["train", "--edges", str(edges), "--embeddings", str(emb),
                   "--out-dir", str(tmp_path / "run"), "--epochs", "40",
                   "--hidden-dim", "8", "--repr-dim", "8",
                   "--learning-rate", "1e100"])
    assert rc == 3
    assert "non-finite" in capsys.readouterr().err


# ------------------------------------------------------------------- predict


def trained_checkpoint(tmp_path, edges, emb):
    out = tmp_path / "trainrun"
    rc = cli.main(["train", "--edges", str(edges), "--embeddings", str(emb),
                   "--out-dir", str(out), "--epochs", "5", "--hidden-dim", "8",
                   "--repr-dim", "8"])
    assert rc == 0
    return out / "model.ckpt"


def test_cmd_predict_pair_order_matters(tmp_path, capsys):
    g, _, edges, emb = write_graph_files(tmp_path, seed=4)
    ckpt = trained_checkpoint(tmp_path, edges, emb)
    pairs = tmp_path / "pairs.tsv"
    a, b = g.node_ids[0], g.node_ids[20]
    pairs.write_text(f"{a}\t{b}\n{b}\t{a}\n", encoding="utf-8")
    out = tmp_path / "probs.tsv"
    rc = cli.main(["predict", "--edges", str(edges), "--embeddings", str(emb),
                   "--checkpoint", str(ckpt), "--pairs", str(pairs),
                   "--output", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    p_ab = float(lines[0].split("\t")[2])
    p_ba = float(lines[1].split("\t")[2])
    assert lines[0].split("\t")[:2] == [a, b]
    assert p_ab != p_ba


def test_cmd_predict_empty_pairs(tmp_path, capsys):
    _, _, edges, emb = write_graph_files(tmp_path, seed=5)
    ckpt = trained_checkpoint(tmp_path, edges, emb)
    pairs = tmp_path / "pairs.tsv"
    pairs.write_text("")
    out = tmp_path / "probs.tsv"
    rc = cli.main(["predict", "--edges", str(edges), "--embeddings", str(emb),
                   "--checkpoint", str(ckpt), "--pairs", str(pairs),
                   "--output", str(out)])
    assert rc == 0
    assert out.read_text() == ""


def test_cmd_predict_dimension_mismatch(tmp_path, capsys):
    g, feats, edges, emb = write_graph_files(tmp_path, seed=6)
    ckpt = trained_checkpoint(tmp_path, edges, emb)
    # embeddings with the wrong width
    bad = tmp_path / "bad_emb.txt"
    bad.write_text(write_embeddings(g, feats[:, :4]), encoding="utf-8")
    pairs = tmp_path / "pairs.tsv"
    pairs.write_text(f"{g.node_ids[0]}\t{g.node_ids[1]}\n", encoding="utf-8")
    rc = cli.main(["predict", "--edges", str(edges), "--embeddings", str(bad),
                   "--checkpoint", str(ckpt), "--pairs", str(pairs),
                   "--output", str(tmp_path / "o.tsv")])
    assert rc == 2
    assert "dim" in capsys.readouterr().err


# ------------------------------------------------------------- configuration


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("epochs = 7\nhidden_dim = 4\n# comment\n")
    _, _, edges, emb = write_graph_files(tmp_path, seed=7)
    out = tmp_path / "run"
    rc = cli.main(["train", "--edges", str(edges), "--embeddings", str(emb),
                   "--out-dir", str(out), "--config", str(cfg),
                   "--epochs", "3", "--repr-dim", "8"])
    assert rc == 0
    # CLI --epochs overrides the file; the file's hidden_dim applies
    loss = (out / "loss.csv").read_text().splitlines()
    assert len(loss) == 4
    loaded = load_checkpoint(out / "model.ckpt")
    assert loaded.gnn.hidden_dim == 4


def test_dataset_preset_batch_size():
    import argparse

    ns = argparse.Namespace(dataset_preset="university-courses", config=None)
    opts = cli._resolved(ns, ["batch_size", "k"])
    assert opts["batch_size"] == 512
    assert opts["k"] == 2
    ns = argparse.Namespace(dataset_preset="moocs", config=None)
    assert cli._resolved(ns, ["batch_size"])["batch_size"] == 256


def test_unknown_preset_is_config_error(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("dataset_preset = nonsense\n")
    edges = tmp_path / "e.tsv"
    edges.write_text("a\tb\n")
    rc = cli.main(["tuples", "--edges", str(edges), "--k", "2",
                   "--out-dir", str(tmp_path / "o"), "--config", str(cfg)])
    assert rc == 2
    assert "preset" in capsys.readouterr().err
