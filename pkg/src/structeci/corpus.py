"""Corpus, embedding and parse loading.

All on-disk formats are line oriented: JSONL for samples and embeddings,
one CoNLL-U file per sample for parses. Loaders validate eagerly and
raise DataError with enough context to find the offending line.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .jsonl import read_jsonl
from .syntax_metric import DepTree, build_tree

logger = logging.getLogger(__name__)

VALID_LABELS = ("Yes", "No")


@dataclass(frozen=True)
class EventSpan:
    surface: str
    char_start: int
    char_end: int


@dataclass(frozen=True)
class Sample:
    id: str
    context: str
    source_event: EventSpan
    target_event: EventSpan
    label: str | None = None
    group: str | None = None

    def validate(self) -> None:
        for name, span in (("source", self.source_event), ("target", self.target_event)):
            if not (0 <= span.char_start <= span.char_end <= len(self.context)):
                raise DataError(f"sample {self.id}: {name} span [{span.char_start}, {span.char_end}) out of bounds")
            actual = self.context[span.char_start:span.char_end]
            if actual != span.surface:
                raise DataError(
                    f"sample {self.id}: {name} span text {actual!r} does not match surface {span.surface!r}"
                )
        if self.label is not None and self.label not in VALID_LABELS:
            raise DataError(f"sample {self.id}: label must be one of {VALID_LABELS}, got {self.label!r}")


def _span_from_json(sample_id: str, name: str, obj: object) -> EventSpan:
    if not isinstance(obj, dict):
        raise DataError(f"sample {sample_id}: {name} must be an object")
    try:
        return EventSpan(surface=str(obj["surface"]), char_start=int(obj["start"]), char_end=int(obj["end"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"sample {sample_id}: bad {name} event: {exc}") from exc


def sample_from_json(obj: dict) -> Sample:
    sample_id = str(obj.get("id", ""))
    if not sample_id:
        raise DataError("sample is missing an id")
    if "context" not in obj:
        raise DataError(f"sample {sample_id}: missing context")
    sample = Sample(
        id=sample_id,
        context=str(obj["context"]),
        source_event=_span_from_json(sample_id, "source", obj.get("source")),
        target_event=_span_from_json(sample_id, "target", obj.get("target")),
        label=None if obj.get("label") is None else str(obj["label"]),
        group=None if obj.get("group") is None else str(obj["group"]),
    )
    sample.validate()
    return sample


def sample_to_json(sample: Sample) -> dict:
    record: dict = {
        "id": sample.id,
        "context": sample.context,
        "source": {
            "surface": sample.source_event.surface,
            "start": sample.source_event.char_start,
            "end": sample.source_event.char_end,
        },
        "target": {
            "surface": sample.target_event.surface,
            "start": sample.target_event.char_start,
            "end": sample.target_event.char_end,
        },
    }
    if sample.label is not None:
        record["label"] = sample.label
    if sample.group is not None:
        record["group"] = sample.group
    return record


def load_corpus(path: str | Path) -> list[Sample]:
    samples: list[Sample] = []
    seen: set[str] = set()
    for line_no, obj in read_jsonl(path):
        if not isinstance(obj, dict):
            raise DataError(f"{path}: line {line_no}: expected a JSON object")
        try:
            sample = sample_from_json(obj)
        except DataError as exc:
            raise DataError(f"{path}: line {line_no}: {exc}") from exc
        if sample.id in seen:
            raise DataError(f"{path}: line {line_no}: duplicate sample id {sample.id!r}")
        seen.add(sample.id)
        samples.append(sample)
    return samples


def dump_corpus(samples: list[Sample], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for sample in samples:
            handle.write(json.dumps(sample_to_json(sample), ensure_ascii=False) + "\n")


class EmbeddingStore:
    """Key to vector map with a single fixed dimension."""

    def __init__(self, dimension: int, entries: dict[str, tuple[float, ...]]):
        self.dimension = dimension
        self._entries = entries

    def get(self, key: str) -> tuple[float, ...] | None:
        return self._entries.get(key)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def keys(self) -> list[str]:
        return sorted(self._entries)


def load_embeddings(path: str | Path) -> EmbeddingStore:
    entries: dict[str, tuple[float, ...]] = {}
    dimension: int | None = None
    for line_no, obj in read_jsonl(path):
        if not isinstance(obj, dict) or "key" not in obj or "vector" not in obj:
            raise DataError(f"{path}: line {line_no}: expected an object with key and vector")
        key = str(obj["key"])
        raw = obj["vector"]
        if not isinstance(raw, list) or not raw:
            raise DataError(f"{path}: line {line_no}: vector must be a non-empty array")
        try:
            vector = tuple(float(v) for v in raw)
        except (TypeError, ValueError) as exc:
            raise DataError(f"{path}: line {line_no}: vector has a non-numeric entry: {exc}") from exc
        if any(not math.isfinite(v) for v in vector):
            raise DataError(f"{path}: line {line_no}: vector for {key!r} has a non-finite entry")
        if dimension is None:
            dimension = len(vector)
        elif len(vector) != dimension:
            raise DataError(
                f"{path}: line {line_no}: vector for {key!r} has dimension {len(vector)}, expected {dimension}"
            )
        entries[key] = vector
    if dimension is None:
        raise DataError(f"{path}: no embeddings found")
    return EmbeddingStore(dimension=dimension, entries=entries)


@dataclass
class ParseStore:
    trees: dict[str, DepTree] = field(default_factory=dict)

    def get(self, sample_id: str) -> DepTree | None:
        return self.trees.get(sample_id)

    def __contains__(self, sample_id: str) -> bool:
        return sample_id in self.trees

    def __len__(self) -> int:
        return len(self.trees)


def load_parses(directory: str | Path) -> ParseStore:
    """Load every <sample id>.conllu file under a directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"parse directory {directory} does not exist")
    store = ParseStore()
    for path in sorted(directory.glob("*.conllu")):
        try:
            tree = build_tree(path.read_text("utf-8"))
        except DataError as exc:
            raise DataError(f"{path.name}: {exc}") from exc
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc}") from exc
        store.trees[path.stem] = tree
    return store
