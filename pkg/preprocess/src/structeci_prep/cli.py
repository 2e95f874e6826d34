"""Command-line driver for the preprocessing pipeline.

Exit codes: 0 success, 1 usage or configuration problem, 2 bad input
data (including any sample whose parse had to be skipped).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .encoders import get_encoder
from .errors import ConfigError, DataError
from .parser_backends import get_parser
from .pipeline import (
    DEFAULT_MAX_HOPS,
    collect_keys,
    embed_keys,
    parse_to_conllu,
    read_corpus,
    read_keys,
    restrict_dump,
    run as run_pipeline,
    write_keys,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse API
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="structeci-prep", description="Corpus preprocessing for structural retrieval")
    parser.add_argument("--parser", default="heuristic", help="dependency parser backend")
    parser.add_argument("--encoder", default="hash3", help="embedding backend")
    sub = parser.add_subparsers(dest="command", required=True)

    parse_cmd = sub.add_parser("parse", help="write one CoNLL-U file per sample")
    parse_cmd.add_argument("--corpus", required=True)
    parse_cmd.add_argument("--out-dir", dest="out_dir", required=True)

    keys_cmd = sub.add_parser("collect-keys", help="list every lookup key, one per line")
    keys_cmd.add_argument("--corpus", required=True)
    keys_cmd.add_argument("--out", required=True)
    keys_cmd.add_argument("--dump", help="concept dump whose node labels join the keys")

    embed_cmd = sub.add_parser("embed", help="encode a keys file into embedding JSONL")
    embed_cmd.add_argument("--keys", required=True)
    embed_cmd.add_argument("--out", required=True)

    restrict_cmd = sub.add_parser("restrict-dump", help="drop dump rows far from every event concept")
    restrict_cmd.add_argument("--corpus", required=True)
    restrict_cmd.add_argument("--dump", required=True)
    restrict_cmd.add_argument("--out", required=True)
    restrict_cmd.add_argument("--max-hops", dest="max_hops", type=int, default=DEFAULT_MAX_HOPS)

    run_cmd = sub.add_parser("run", help="full pass: parses, keys, embeddings, manifest")
    run_cmd.add_argument("--corpus", required=True)
    run_cmd.add_argument("--out-dir", dest="out_dir", required=True)
    run_cmd.add_argument("--dump", help="optional concept dump to restrict and copy along")
    run_cmd.add_argument("--max-hops", dest="max_hops", type=int, default=DEFAULT_MAX_HOPS)
    return parser


def _require_file(path: str, what: str) -> Path:
    resolved = Path(path)
    if not resolved.is_file():
        raise ConfigError(f"{what} {resolved} does not exist")
    return resolved


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "parse":
        corpus = read_corpus(_require_file(args.corpus, "corpus"))
        written, skipped = parse_to_conllu(corpus, get_parser(args.parser), args.out_dir)
        print(f"wrote {written} parse files to {args.out_dir}")
        if skipped:
            print(f"skipped {len(skipped)} samples: {', '.join(skipped)}", file=sys.stderr)
            return EXIT_DATA
        return EXIT_OK

    if args.command == "collect-keys":
        corpus = read_corpus(_require_file(args.corpus, "corpus"))
        dump = _require_file(args.dump, "concept dump") if args.dump else None
        keys = collect_keys(corpus, dump)
        write_keys(keys, args.out)
        print(f"wrote {len(keys)} keys to {args.out}")
        return EXIT_OK

    if args.command == "embed":
        keys = read_keys(_require_file(args.keys, "keys file"))
        count = embed_keys(keys, get_encoder(args.encoder), args.out)
        print(f"wrote {count} embeddings to {args.out}")
        return EXIT_OK

    if args.command == "restrict-dump":
        corpus = read_corpus(_require_file(args.corpus, "corpus"))
        dump = _require_file(args.dump, "concept dump")
        if args.max_hops < 0:
            raise ConfigError("--max-hops must be >= 0")
        summary = restrict_dump(dump, corpus, args.out, max_hops=args.max_hops)
        print(f"kept {summary['kept_rows']} of {summary['kept_rows'] + summary['dropped_rows']} dump rows")
        return EXIT_OK

    if args.command == "run":
        corpus_path = _require_file(args.corpus, "corpus")
        dump = _require_file(args.dump, "concept dump") if args.dump else None
        if args.max_hops < 0:
            raise ConfigError("--max-hops must be >= 0")
        manifest = run_pipeline(
            corpus_path,
            args.out_dir,
            get_parser(args.parser),
            get_encoder(args.encoder),
            dump_path=dump,
            max_hops=args.max_hops,
        )
        print(
            f"processed {manifest.samples} samples: "
            f"{manifest.parses_written} parses, {manifest.keys_embedded} embeddings"
        )
        if manifest.parses_skipped:
            print(f"skipped {len(manifest.parses_skipped)} samples", file=sys.stderr)
            return EXIT_DATA
        return EXIT_OK

    raise ConfigError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
