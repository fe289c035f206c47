"""CLI: semfilter-export --model <alias|hf-id|path> --out <dir>."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .export import CHECKPOINT_ALIASES, MIN_COSINE, ExportError, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semfilter-export",
        description="Convert a TinyCLIP checkpoint into a semfilter assets directory",
    )
    parser.add_argument(
        "--model", required=True,
        help=f"checkpoint alias ({', '.join(CHECKPOINT_ALIASES)}), hub id, or local path",
    )
    parser.add_argument("--out", required=True, help="assets output directory")
    parser.add_argument("--min-cosine", type=float, default=MIN_COSINE,
                        help="self-check threshold (default %(default)s)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        manifest = export(args.model, args.out, min_cosine=args.min_cosine)
    except ExportError as exc:
        logging.getLogger("semfilter_export").error("%s", exc)
        return 1
    print(json.dumps({"out": args.out, "min_cosine": manifest["self_check"]["min_cosine"],
                      "files": len(manifest["files"])}))
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
