"""Command-line entry point: concept TSV in, embedding file out."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .extract import ConceptInputError, DEFAULT_MAX_TOKENS, ModelLoadError, extract, read_concepts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="concept-embed",
        description="Extract a node embedding file from per-concept text descriptions",
    )
    parser.add_argument("--input", required=True, help="TSV: node_id<TAB>text")
    parser.add_argument("--output", required=True, help="embedding file to write")
    parser.add_argument(
        "--model",
        default="hashed:1024",
        help="HuggingFace model path/id, or hashed:<dim> for the offline encoder",
    )
    parser.add_argument("--max-tokens", type=int, default=DEFAULT_MAX_TOKENS)
    parser.add_argument("--pooling", choices=["mean", "cls"], default="mean")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument(
        "--deterministic",
        action="store_true",
        default=True,
        help="pin deterministic inference (default on)",
    )
    parser.add_argument(
        "--no-deterministic", dest="deterministic", action="store_false"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    input_path = Path(args.input)
    if not input_path.is_file():
        print(f"error: input file not found: {input_path}", file=sys.stderr)
        return 2
    try:
        with input_path.open(encoding="utf-8") as fh:
            concepts = read_concepts(fh)
        text = extract(
            concepts,
            max_tokens=args.max_tokens,
            model_name=args.model,
            pooling=args.pooling,
            deterministic=args.deterministic,
            batch_size=args.batch_size,
        )
    except (ConceptInputError, ModelLoadError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    Path(args.output).write_text(text, encoding="utf-8")
    header = text.split("\n", 1)[0]
    print(f"wrote {args.output} ({header})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
