"""Turn per-concept text into the embedding file format of the graph engine.

Input is a TSV of ``node_id<TAB>text`` rows (tabs, newlines, and backslashes
inside the text are escaped as ``\\t``, ``\\n``, ``\\\\``). Output is the
embedding file the link-prediction engine ingests: a ``N d`` header followed
by one ``node_id v1 ... vd`` row per concept, in input order.

Two encoder families:

* ``hashed:<dim>`` - an offline, fully deterministic encoder: whitespace
  tokens map to fixed Gaussian vectors seeded from a stable token hash and
  are mean-pooled. No model weights needed; intended for air-gapped runs,
  smoke tests, and plumbing validation.
* any other name - a HuggingFace transformers model (local path or cached
  id). Final hidden states are mean-pooled over non-padding tokens, or the
  first-token vector with ``pooling="cls"``. Inference runs in eval mode
  under no_grad; deterministic mode additionally pins torch to
  deterministic algorithms and one thread.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable

import numpy as np

DEFAULT_MAX_TOKENS = 256


class ConceptInputError(ValueError):
    """Malformed concept TSV or empty node ids/texts."""


class ModelLoadError(RuntimeError):
    """The requested embedding model could not be loaded."""


@dataclass(frozen=True)
class ConceptText:
    node_id: str
    text: str


def _unescape(field: str) -> str:
    out = []
    i = 0
    while i < len(field):
        ch = field[i]
        if ch == "\\" and i + 1 < len(field):
            nxt = field[i + 1]
            if nxt == "t":
                out.append("\t")
                i += 2
                continue
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
            if nxt == "\\":
                out.append("\\")
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def read_concepts(stream: Iterable[str] | str) -> list[ConceptText]:
    """Parse the concept TSV; one concept per non-empty, non-comment line."""
    if isinstance(stream, str):
        stream = stream.splitlines()
    concepts: list[ConceptText] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            raise ConceptInputError(f"line {lineno}: expected 'node_id<TAB>text'")
        node_id, _, text = line.partition("\t")
        if not node_id:
            raise ConceptInputError(f"line {lineno}: empty node_id")
        concepts.append(ConceptText(node_id=node_id, text=_unescape(text)))
    return concepts


def _normalized_tokens(text: str) -> list[str]:
    return text.split()


class HashedEncoder:
    """Deterministic offline encoder: hashed token vectors, mean pooled."""

    def __init__(self, dim: int) -> None:
        if dim < 1:
            raise ModelLoadError(f"hashed encoder needs a positive width, got {dim}")
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            seed = int.from_bytes(digest[:8], "little")
            vec = np.random.default_rng(seed).standard_normal(self.dim)
            self._cache[token] = vec
        return vec

    def encode(self, texts: list[str], max_tokens: int, pooling: str) -> np.ndarray:
        rows = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            tokens = _normalized_tokens(text)[:max_tokens]
            if pooling == "cls":
                rows[i] = self._token_vector(tokens[0])
            else:
                rows[i] = np.mean([self._token_vector(t) for t in tokens], axis=0)
        return rows


class TransformerEncoder:
    """Pretrained-language-model encoder over final hidden states."""

    def __init__(self, model_name: str, deterministic: bool = True,
                 batch_size: int = 8) -> None:
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadError(f"transformers/torch unavailable: {exc}") from exc
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_name)
            self.model = AutoModel.from_pretrained(model_name)
        except Exception as exc:
            raise ModelLoadError(f"cannot load model {model_name!r}: {exc}") from exc
        self._torch = torch
        self.batch_size = batch_size
        self.model.eval()
        if deterministic:
            torch.manual_seed(0)
            torch.set_num_threads(1)
            torch.use_deterministic_algorithms(True)
        self.dim = int(self.model.config.hidden_size)

    def encode(self, texts: list[str], max_tokens: int, pooling: str) -> np.ndarray:
        torch = self._torch
        rows = []
        with torch.no_grad():
            for start in range(0, len(texts), self.batch_size):
                batch = texts[start : start + self.batch_size]
                enc = self.tokenizer(
                    batch,
                    padding=True,
                    truncation=True,
                    max_length=max_tokens,
                    return_tensors="pt",
                )
                hidden = self.model(**enc).last_hidden_state
                if pooling == "cls":
                    pooled = hidden[:, 0, :]
                else:
                    mask = enc["attention_mask"].unsqueeze(-1).to(hidden.dtype)
                    pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1)
                rows.append(pooled.double().cpu().numpy())
        return np.concatenate(rows, axis=0)


def build_encoder(model_name: str, deterministic: bool = True, batch_size: int = 8):
    if model_name.startswith("hashed:"):
        try:
            dim = int(model_name.split(":", 1)[1])
        except ValueError:
            raise ModelLoadError(f"bad hashed encoder spec {model_name!r}") from None
        return HashedEncoder(dim)
    return TransformerEncoder(model_name, deterministic=deterministic,
                              batch_size=batch_size)


def encode_concepts(
    concepts: list[ConceptText],
    max_tokens: int = DEFAULT_MAX_TOKENS,
    model_name: str = "hashed:1024",
    pooling: str = "mean",
    deterministic: bool = True,
    batch_size: int = 8,
) -> np.ndarray:
    """One embedding row per concept, in input order."""
    if pooling not in ("mean", "cls"):
        raise ConceptInputError(f"pooling must be 'mean' or 'cls', got {pooling!r}")
    if max_tokens < 1:
        raise ConceptInputError(f"max_tokens must be >= 1, got {max_tokens}")
    empty = [c.node_id for c in concepts if not " ".join(c.text.split())]
    if empty:
        raise ConceptInputError(f"empty text for node(s): {', '.join(empty)}")
    encoder = build_encoder(model_name, deterministic=deterministic,
                            batch_size=batch_size)
    texts = [" ".join(c.text.split()) for c in concepts]
    rows = encoder.encode(texts, max_tokens, pooling)
    if not np.all(np.isfinite(rows)):
        raise ModelLoadError("model produced non-finite embedding values")
    return rows


def render_embedding_file(concepts: list[ConceptText], rows: np.ndarray) -> str:
    """The graph engine's embedding format: 'N d' header plus one row per id."""
    n, d = rows.shape
    lines = [f"{n} {d}"]
    for concept, row in zip(concepts, rows):
        lines.append(f"{concept.node_id} " + " ".join(f"{x:.17g}" for x in row))
    return "\n".join(lines) + "\n"


def extract(
    concepts: list[ConceptText],
    max_tokens: int = DEFAULT_MAX_TOKENS,
    model_name: str = "hashed:1024",
    pooling: str = "mean",
    deterministic: bool = True,
    batch_size: int = 8,
) -> str:
    """Full pipeline: encode and render the embedding file text."""
    rows = encode_concepts(concepts, max_tokens, model_name, pooling,
                           deterministic, batch_size)
    return render_embedding_file(concepts, rows)
