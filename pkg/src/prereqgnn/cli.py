"""Command-line interface: tuple/WL inspection, training, and prediction.

Options resolve in precedence order: explicit flag > config file (``key = value``
lines, ``#`` comments) > dataset preset > built-in default. Exit status is 0 on
success, 2 on validation or configuration errors, 3 on training divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .checkpoint import load_checkpoint, save_checkpoint
from .errors import (
    ConfigError,
    DivergenceError,
    GraphDataError,
    SamplingExhaustedError,
    ShapeError,
)
from .graph import assemble_dataset, load_edge_list, load_embeddings, load_pairs
from .predictor import TrainConfig, evaluate, predict_pairs, train
from .tuples import dump_position_graph, dump_tuple_set
from .wl import distinguish_rounds
from . import gnn

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

DEFAULTS = {
    "k": 2,
    "learning_rate": 2e-5,
    "epochs": 4000,
    "batch_size": 256,
    "split_ratio": 0.8,
    "negative_ratio": 1.0,
    "threshold": 0.5,
    "hidden_dim": 64,
    "repr_dim": 64,
    "layers": 2,
    "encoder_depth": 2,
    "seed": 0,
    "threads": 1,
    "resample_negatives": False,
}

# Batch sizes follow the experimental protocol: 512 for the University
# Courses layout, 256 elsewhere.
PRESETS = {
    "university-courses": {"batch_size": 512},
    "moocs": {"batch_size": 256},
    "lecturebank": {"batch_size": 256},
}

_CASTS = {
    "k": int,
    "epochs": int,
    "batch_size": int,
    "hidden_dim": int,
    "repr_dim": int,
    "layers": int,
    "encoder_depth": int,
    "seed": int,
    "threads": int,
    "max_iters": int,
    "learning_rate": float,
    "split_ratio": float,
    "negative_ratio": float,
    "threshold": float,
    "resample_negatives": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
}


def parse_config_file(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path} line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip().lower().replace("-", "_")] = value.strip()
    return values


def resolve_option(name: str, args: argparse.Namespace, file_cfg: dict, preset: dict):
    cli_value = getattr(args, name, None)
    if cli_value is not None:
        return cli_value
    if name in file_cfg:
        cast = _CASTS.get(name, str)
        try:
            return cast(file_cfg[name])
        except ValueError:
            raise ConfigError(f"config value for {name!r}: {file_cfg[name]!r}") from None
    if name in preset:
        return preset[name]
    return DEFAULTS.get(name)


def _resolved(args: argparse.Namespace, names: list[str]) -> dict:
    file_cfg: dict[str, str] = {}
    config_path = getattr(args, "config", None)
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        file_cfg = parse_config_file(path)
    preset_name = getattr(args, "dataset_preset", None) or file_cfg.get("dataset_preset")
    preset: dict = {}
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(
                f"unknown dataset preset {preset_name!r}; choose from {sorted(PRESETS)}"
            )
        preset = PRESETS[preset_name]
    return {name: resolve_option(name, args, file_cfg, preset) for name in names}


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


def _load_graph(path: str):
    with _require_file(path, "edge file").open(encoding="utf-8") as fh:
        return load_edge_list(fh)


def cmd_tuples(args: argparse.Namespace) -> int:
    opts = _resolved(args, ["k", "threads"])
    graph = _load_graph(args.edges)
    bundle = gnn.prepare(graph, opts["k"], threads=opts["threads"])
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "tuples.tsv").write_text(dump_tuple_set(bundle.tuples), encoding="utf-8")
    print(f"tuples={len(bundle.tuples)}")
    for pg in bundle.position_graphs:
        name = f"position_graph_{pg.position}.tsv"
        (out_dir / name).write_text(dump_position_graph(pg), encoding="utf-8")
        print(f"G{pg.position} arcs={len(pg.arcs)}")
    return EXIT_OK


def cmd_wl(args: argparse.Namespace) -> int:
    opts = _resolved(args, ["k", "max_iters"])
    g1 = _load_graph(args.graph1)
    g2 = _load_graph(args.graph2)
    verdict, rounds = distinguish_rounds(g1, g2, opts["k"], opts["max_iters"])
    print(f"{'DISTINGUISHED' if verdict else 'NOT-DISTINGUISHED'} rounds={rounds}")
    return EXIT_OK


def _write_metrics(path: Path, dataset: str, metrics, threshold: float) -> None:
    header = "dataset\tprecision\trecall\tf1\ttp\tfp\tfn\ttn\tthreshold"
    row = (
        f"{dataset}\t{metrics.precision:.6f}\t{metrics.recall:.6f}\t{metrics.f1:.6f}"
        f"\t{metrics.tp}\t{metrics.fp}\t{metrics.fn}\t{metrics.tn}\t{threshold:.6g}"
    )
    path.write_text(header + "\n" + row + "\n", encoding="utf-8")


def _write_loss(path: Path, history: list[float]) -> None:
    lines = ["epoch,mean_loss"]
    lines.extend(f"{i},{loss:.17g}" for i, loss in enumerate(history))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_train(args: argparse.Namespace) -> int:
    names = [
        "k", "learning_rate", "epochs", "batch_size", "split_ratio", "negative_ratio",
        "threshold", "hidden_dim", "repr_dim", "layers", "encoder_depth", "seed",
        "threads", "resample_negatives",
    ]
    opts = _resolved(args, names)
    graph = _load_graph(args.edges)
    with _require_file(args.embeddings, "embedding file").open(encoding="utf-8") as fh:
        features = load_embeddings(fh, graph)

    config = TrainConfig(
        learning_rate=opts["learning_rate"],
        epochs=opts["epochs"],
        batch_size=opts["batch_size"],
        seed=opts["seed"],
        threshold=opts["threshold"],
        negative_ratio=opts["negative_ratio"],
        resample_negatives=opts["resample_negatives"],
    )
    pair_set = assemble_dataset(
        graph,
        split_ratio=opts["split_ratio"],
        negative_ratio=opts["negative_ratio"],
        seed=opts["seed"],
    )
    bundle = gnn.prepare(graph, opts["k"], threads=opts["threads"])
    result = train(
        graph, features, pair_set, config,
        k=opts["k"], layer_count=opts["layers"], hidden_dim=opts["hidden_dim"],
        repr_dim=opts["repr_dim"], encoder_depth=opts["encoder_depth"],
        threads=opts["threads"], bundle=bundle,
    )

    dataset = args.dataset_name or Path(args.edges).stem
    metrics = evaluate(result.model, bundle, features, pair_set.test, config.threshold)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out_dir / "model.ckpt", result.model)
    _write_loss(out_dir / "loss.csv", result.loss_history)
    _write_metrics(out_dir / "metrics.tsv", dataset, metrics, config.threshold)
    print(
        f"dataset={dataset} train_pairs={len(pair_set.train)} test_pairs={len(pair_set.test)} "
        f"f1={metrics.f1:.6f} precision={metrics.precision:.6f} recall={metrics.recall:.6f}"
    )
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    opts = _resolved(args, ["threads"])
    graph = _load_graph(args.edges)
    with _require_file(args.embeddings, "embedding file").open(encoding="utf-8") as fh:
        features = load_embeddings(fh, graph)
    model = load_checkpoint(_require_file(args.checkpoint, "checkpoint"))
    if model.gnn.in_dim != features.shape[1]:
        raise ConfigError(
            f"checkpoint expects {model.gnn.in_dim}-dim embeddings, "
            f"file provides {features.shape[1]}-dim"
        )
    with _require_file(args.pairs, "pair file").open(encoding="utf-8") as fh:
        pairs = load_pairs(fh, graph)
    bundle = gnn.prepare(graph, model.gnn.k, threads=opts["threads"])
    probs = predict_pairs(model, bundle, features, [(s, t) for s, t, _ in pairs])
    lines = [
        f"{graph.node_ids[s]}\t{graph.node_ids[t]}\t{p:.6f}"
        for (s, t, _), p in zip(pairs, probs)
    ]
    text = "\n".join(lines) + "\n" if lines else ""
    Path(args.output).write_text(text, encoding="utf-8")
    print(f"wrote {len(lines)} probabilities to {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prereqgnn",
        description="Directed link prediction on concept graphs with WL-guided GNNs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key = value config file; flags override it")
        p.add_argument("--threads", type=int, help="worker threads for position graphs")

    p_tuples = sub.add_parser("tuples", help="dump the restricted tuple set and position graphs")
    p_tuples.add_argument("--edges", required=True)
    p_tuples.add_argument("--k", type=int)
    p_tuples.add_argument("--out-dir", required=True)
    common(p_tuples)
    p_tuples.set_defaults(func=cmd_tuples)

    p_wl = sub.add_parser("wl", help="non-isomorphism test between two edge lists")
    p_wl.add_argument("--graph1", required=True)
    p_wl.add_argument("--graph2", required=True)
    p_wl.add_argument("--k", type=int)
    p_wl.add_argument("--max-iters", type=int)
    common(p_wl)
    p_wl.set_defaults(func=cmd_wl)

    p_train = sub.add_parser("train", help="split, sample negatives, train, evaluate")
    p_train.add_argument("--edges", required=True)
    p_train.add_argument("--embeddings", required=True)
    p_train.add_argument("--out-dir", required=True)
    p_train.add_argument("--dataset-name")
    p_train.add_argument("--dataset-preset", choices=sorted(PRESETS))
    p_train.add_argument("--k", type=int)
    p_train.add_argument("--learning-rate", type=float)
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--batch-size", type=int)
    p_train.add_argument("--split-ratio", type=float)
    p_train.add_argument("--negative-ratio", type=float)
    p_train.add_argument("--threshold", type=float)
    p_train.add_argument("--hidden-dim", type=int)
    p_train.add_argument("--repr-dim", type=int)
    p_train.add_argument("--layers", type=int)
    p_train.add_argument("--encoder-depth", type=int)
    p_train.add_argument("--seed", type=int)
    p_train.add_argument(
        "--resample-negatives", action="store_const", const=True, default=None
    )
    common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_pred = sub.add_parser("predict", help="score a pair file with a trained checkpoint")
    p_pred.add_argument("--edges", required=True)
    p_pred.add_argument("--embeddings", required=True)
    p_pred.add_argument("--checkpoint", required=True)
    p_pred.add_argument("--pairs", required=True)
    p_pred.add_argument("--output", required=True)
    common(p_pred)
    p_pred.set_defaults(func=cmd_predict)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GraphDataError, ConfigError, ShapeError, SamplingExhaustedError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
