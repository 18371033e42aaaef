"""Embedding-file extraction from per-concept text descriptions."""

from .extract import (
    ConceptInputError,
    ConceptText,
    DEFAULT_MAX_TOKENS,
    HashedEncoder,
    ModelLoadError,
    TransformerEncoder,
    build_encoder,
    encode_concepts,
    extract,
    read_concepts,
    render_embedding_file,
)

__version__ = "0.1.0"
