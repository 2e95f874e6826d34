"""Batch preprocessing over a labelled event corpus.

Reads the same corpus JSONL the retrieval engine consumes and emits the
artifacts that engine loads: one CoNLL-U file per sample, an embedding
JSONL keyed by lowercased event surfaces and concept labels, and an
optionally restricted concept dump. All outputs are written atomically
(temp file in the target directory, then rename), and a manifest
records which backends produced them.

This package talks to the retrieval engine only through those file
formats. It never imports it.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import DataError

logger = logging.getLogger(__name__)

ENGLISH_PREFIX = "/c/en/"
DEFAULT_MAX_HOPS = 4


@dataclass(frozen=True)
class CorpusRow:
    """The slice of a corpus record preprocessing needs."""

    id: str
    context: str
    source_surface: str
    target_surface: str


@dataclass
class PreprocessManifest:
    corpus: str
    parses_dir: str
    embeddings: str
    parser_id: str
    encoder_id: str
    samples: int = 0
    parses_written: int = 0
    parses_skipped: list[str] = field(default_factory=list)
    keys_embedded: int = 0
    dump_restriction: dict | None = None


def read_corpus(path: str | Path) -> list[CorpusRow]:
    """Minimal corpus reader: id, context, and the two event surfaces."""
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise DataError(f"cannot read corpus {path}: {exc}") from exc
    rows: list[CorpusRow] = []
    seen: set[str] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: line {line_no}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise DataError(f"{path}: line {line_no}: expected a JSON object")
        try:
            row = CorpusRow(
                id=str(obj["id"]),
                context=str(obj["context"]),
                source_surface=str(obj["source"]["surface"]),
                target_surface=str(obj["target"]["surface"]),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}: line {line_no}: missing field: {exc}") from exc
        if row.id in seen:
            raise DataError(f"{path}: line {line_no}: duplicate sample id {row.id!r}")
        seen.add(row.id)
        rows.append(row)
    if not rows:
        raise DataError(f"{path}: no samples found")
    return rows


def atomic_write(path: str | Path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = tempfile.NamedTemporaryFile(
        "w", encoding="utf-8", dir=path.parent, prefix=path.name + ".", suffix=".tmp", delete=False
    )
    try:
        with handle:
            handle.write(text)
        os.replace(handle.name, path)
    except BaseException:
        os.unlink(handle.name)
        raise


def parse_to_conllu(rows: list[CorpusRow], parser, out_dir: str | Path) -> tuple[int, list[str]]:
    """Parse each context into <id>.conllu. Failures are logged and skipped."""
    out_dir = Path(out_dir)
    written = 0
    skipped: list[str] = []
    for row in rows:
        try:
            conllu = parser.parse(row.context)
        except Exception as exc:
            logger.error("parse failed for sample %s: %s", row.id, exc)
            skipped.append(row.id)
            continue
        atomic_write(out_dir / f"{row.id}.conllu", conllu)
        written += 1
    if skipped:
        logger.warning("skipped %d of %d samples", len(skipped), len(rows))
    return written, skipped


def node_label(node_uri: str) -> str:
    return node_uri.rstrip("/").rsplit("/", 1)[-1].replace("_", " ")


def read_dump_rows(path: str | Path) -> list[list[str]]:
    """Tab-separated dump rows with at least 5 columns; short rows are dropped."""
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise DataError(f"cannot read concept dump {path}: {exc}") from exc
    rows: list[list[str]] = []
    short = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) < 5:
            short += 1
            continue
        rows.append(cols)
    if short:
        logger.warning("dropped %d dump rows with fewer than 5 columns", short)
    return rows


def collect_keys(rows: list[CorpusRow], dump_path: str | Path | None = None) -> list[str]:
    """Every string the engine will look up: event surfaces, then concept labels.

    Surfaces are lowercased to match the engine's lookup normalization.
    Duplicates collapse to one entry (first position kept) with a log line.
    """
    keys: list[str] = []
    seen: set[str] = set()
    duplicates = 0

    def add(key: str) -> None:
        nonlocal duplicates
        if key in seen:
            duplicates += 1
            return
        seen.add(key)
        keys.append(key)

    for row in rows:
        add(row.source_surface.lower())
        add(row.target_surface.lower())
    if dump_path is not None:
        labels: set[str] = set()
        for cols in read_dump_rows(dump_path):
            for uri in (cols[2], cols[3]):
                if uri.startswith(ENGLISH_PREFIX):
                    labels.add(node_label(uri).lower())
        for label in sorted(labels):
            add(label)
    if duplicates:
        logger.info("collapsed %d duplicate keys", duplicates)
    return keys


def write_keys(keys: list[str], path: str | Path) -> None:
    atomic_write(path, "".join(key + "\n" for key in keys))


def read_keys(path: str | Path) -> list[str]:
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise DataError(f"cannot read keys file {path}: {exc}") from exc
    return [line.strip() for line in text.splitlines() if line.strip()]


def embed_keys(keys: list[str], encoder, out_path: str | Path) -> int:
    """Encode each key and write an embedding JSONL. Later duplicates win."""
    vectors: dict[str, list[float]] = {}
    order: list[str] = []
    for key in keys:
        if key in vectors:
            logger.warning("duplicate key %r: keeping the later vector", key)
        else:
            order.append(key)
        vectors[key] = encoder.encode(key)
    if not order:
        raise DataError("no keys to embed")
    lines = [json.dumps({"key": key, "vector": vectors[key]}) for key in order]
    atomic_write(out_path, "".join(line + "\n" for line in lines))
    return len(order)


def restrict_dump(
    dump_path: str | Path,
    rows: list[CorpusRow],
    out_path: str | Path,
    max_hops: int = DEFAULT_MAX_HOPS,
) -> dict:
    """Keep only dump edges whose endpoints sit within max_hops of an event node.

    Event nodes are the English concepts whose label equals a lowercased
    event surface. Hops follow edges in either direction. The returned
    summary goes into the manifest so downstream readers know the dump
    was filtered and how.
    """
    dump_rows = read_dump_rows(dump_path)
    adjacency: dict[str, set[str]] = {}
    for cols in dump_rows:
        start, end = cols[2], cols[3]
        if not (start.startswith(ENGLISH_PREFIX) and end.startswith(ENGLISH_PREFIX)):
            continue
        adjacency.setdefault(start, set()).add(end)
        adjacency.setdefault(end, set()).add(start)
    surfaces = {row.source_surface.lower() for row in rows}
    surfaces |= {row.target_surface.lower() for row in rows}
    seeds = {uri for uri in adjacency if node_label(uri).lower() in surfaces}
    reachable = set(seeds)
    frontier = deque((uri, 0) for uri in sorted(seeds))
    while frontier:
        uri, depth = frontier.popleft()
        if depth == max_hops:
            continue
        for neighbor in adjacency[uri]:
            if neighbor not in reachable:
                reachable.add(neighbor)
                frontier.append((neighbor, depth + 1))
    kept = [
        cols
        for cols in dump_rows
        if cols[2] in reachable and cols[3] in reachable
    ]
    atomic_write(out_path, "".join("\t".join(cols) + "\n" for cols in kept))
    summary = {
        "applied": True,
        "max_hops": max_hops,
        "seed_nodes": len(seeds),
        "kept_nodes": len(reachable),
        "total_nodes": len(adjacency),
        "kept_rows": len(kept),
        "dropped_rows": len(dump_rows) - len(kept),
    }
    logger.info(
        "restricted dump to %d of %d rows (%d of %d nodes)",
        summary["kept_rows"],
        len(dump_rows),
        summary["kept_nodes"],
        summary["total_nodes"],
    )
    return summary


def write_manifest(manifest: PreprocessManifest, path: str | Path) -> None:
    atomic_write(path, json.dumps(asdict(manifest), indent=2) + "\n")


def run(
    corpus_path: str | Path,
    out_dir: str | Path,
    parser,
    encoder,
    dump_path: str | Path | None = None,
    max_hops: int = DEFAULT_MAX_HOPS,
) -> PreprocessManifest:
    """Full pass: parse everything, embed every key, restrict the dump, write a manifest."""
    out_dir = Path(out_dir)
    rows = read_corpus(corpus_path)
    parses_dir = out_dir / "parses"
    embeddings_path = out_dir / "embeddings.jsonl"
    manifest = PreprocessManifest(
        corpus=str(corpus_path),
        parses_dir=str(parses_dir),
        embeddings=str(embeddings_path),
        parser_id=parser.id,
        encoder_id=encoder.id,
        samples=len(rows),
    )
    manifest.parses_written, manifest.parses_skipped = parse_to_conllu(rows, parser, parses_dir)
    keys = collect_keys(rows, dump_path)
    write_keys(keys, out_dir / "keys.txt")
    manifest.keys_embedded = embed_keys(keys, encoder, embeddings_path)
    if dump_path is not None:
        manifest.dump_restriction = restrict_dump(
            dump_path, rows, out_dir / "concept_dump.csv", max_hops=max_hops
        )
    write_manifest(manifest, out_dir / "manifest.json")
    return manifest
