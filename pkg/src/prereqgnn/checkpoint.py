"""Versioned text checkpoint for the full link model.

Line-oriented container: a magic header, ``meta`` lines for the dimension
chain, then one ``tensor`` line per parameter followed by its rows with
17-significant-digit decimals, which round-trip float64 bit-exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import GraphDataError
from .predictor import LinkModel, init_link_model

MAGIC = "prereqgnn-checkpoint v1"

_META_FIELDS = ("k", "in_dim", "hidden_dim", "out_dim", "layer_count", "encoder_depth",
                "rng_seed")


def _format_row(row: np.ndarray) -> str:
    return " ".join(f"{x:.17g}" for x in row)


def save_checkpoint(path: str | Path, model: LinkModel) -> None:
    g = model.gnn
    encoder_depth = len(model.head.encoder.layers)
    meta = {
        "k": g.k,
        "in_dim": g.in_dim,
        "hidden_dim": g.hidden_dim,
        "out_dim": g.out_dim,
        "layer_count": g.layer_count,
        "encoder_depth": encoder_depth,
        "rng_seed": g.rng_seed,
    }
    lines = [MAGIC]
    for key in _META_FIELDS:
        lines.append(f"meta\t{key}\t{meta[key]}")
    for name, arr in model.parameters().items():
        mat = np.atleast_2d(arr)
        dims = " ".join(str(d) for d in arr.shape)
        lines.append(f"tensor\t{name}\t{dims}")
        for row in mat:
            lines.append(_format_row(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> LinkModel:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0] != MAGIC:
        raise GraphDataError(f"{path}: not a {MAGIC!r} file")
    meta: dict[str, int] = {}
    i = 1
    while i < len(text) and text[i].startswith("meta\t"):
        _, key, value = text[i].split("\t")
        meta[key] = int(value)
        i += 1
    missing = [k for k in _META_FIELDS if k not in meta]
    if missing:
        raise GraphDataError(f"{path}: missing meta fields {missing}")

    model = init_link_model(
        seed=meta["rng_seed"],
        k=meta["k"],
        in_dim=meta["in_dim"],
        hidden_dim=meta["hidden_dim"],
        repr_dim=meta["out_dim"],
        layer_count=meta["layer_count"],
        encoder_depth=meta["encoder_depth"],
    )
    params = model.parameters()
    seen: set[str] = set()
    while i < len(text):
        line = text[i]
        if not line.strip():
            i += 1
            continue
        if not line.startswith("tensor\t"):
            raise GraphDataError(f"{path}: unexpected line {i + 1}: {line[:40]!r}")
        _, name, dims_text = line.split("\t")
        shape = tuple(int(d) for d in dims_text.split())
        if name not in params:
            raise GraphDataError(f"{path}: unknown tensor {name!r}")
        if shape != params[name].shape:
            raise GraphDataError(
                f"{path}: tensor {name!r} has shape {shape}, expected {params[name].shape}"
            )
        rows = shape[0] if len(shape) == 2 else 1
        block = text[i + 1 : i + 1 + rows]
        if len(block) != rows:
            raise GraphDataError(f"{path}: tensor {name!r} is truncated")
        values = np.array([[float(x) for x in row.split()] for row in block])
        params[name][...] = values.reshape(shape)
        seen.add(name)
        i += 1 + rows
    leftover = set(params) - seen
    if leftover:
        raise GraphDataError(f"{path}: checkpoint missing tensors {sorted(leftover)[:3]}")
    return model
