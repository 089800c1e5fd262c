"""CLI: encode a dataset's prompts into the binary embedding format."""

from __future__ import annotations

import argparse
import sys

from .encoders import DEFAULT_ENCODER, EncoderUnavailable
from .exporter import export_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="encode dataset prompts into the routing toolkit's embedding file format",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="encode prompts from a JSONL dataset")
    p.add_argument("--data", required=True, help="dataset JSONL file")
    p.add_argument("--encoder", default=DEFAULT_ENCODER,
                   help=f"encoder name (default {DEFAULT_ENCODER}; hash:<dim> for the builtin)")
    p.add_argument("--out", required=True, help="output embedding binary")
    p.add_argument("--batch-size", type=int, default=64)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = export_embeddings(args.data, args.encoder, args.out, args.batch_size)
    except EncoderUnavailable as exc:
        print(f"error: encoder unavailable: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    print(
        f"wrote {manifest.count} vectors of dim {manifest.dim} "
        f"({manifest.encoder}) -> {args.out}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
