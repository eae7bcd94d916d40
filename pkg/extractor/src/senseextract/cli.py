"""Command-line entry: embed corpus targets into a SORE file."""

from __future__ import annotations

import argparse
import sys

from .config import ExtractConfig
from .corpusio import CorpusReadError
from .extract import ExtractError, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="senseextract",
        description="Extract contextual target-token embeddings into a SORE file.",
    )
    parser.add_argument("--corpus", required=True, help="corpus line file")
    parser.add_argument("--model", required=True, help="model name or local path")
    parser.add_argument("--layer", type=int, default=-1,
                        help="hidden-state index; -1 = last hidden layer")
    parser.add_argument("--pooling", choices=("mean", "first"), default="mean",
                        help="subtoken pooling over the target span")
    parser.add_argument("--max-len", type=int, default=128,
                        help="max sequence length incl. special tokens")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--out", required=True, help="output SORE file")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = ExtractConfig(
        model=args.model,
        layer=args.layer,
        pooling=args.pooling,
        max_length=args.max_len,
        batch_size=args.batch_size,
    )
    try:
        count = extract(args.corpus, cfg, args.out)
    except (ExtractError, CorpusReadError, FileNotFoundError) as exc:
        print(f"senseextract: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {count} vectors to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
