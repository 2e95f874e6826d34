"""Concept-path serialization and edit-distance similarity.

A path is turned into an English-like sentence by joining quoted node
labels with direction-sensitive relation templates; two paths are then
compared with a normalized Levenshtein distance over those sentences.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from .errors import DataError

logger = logging.getLogger(__name__)

FORWARD = "forward"
INVERSE = "inverse"

# Relations with no template entry fall back to this symmetric phrase.
FALLBACK_PHRASES = ("is related to", "is related to")


@dataclass(frozen=True)
class PathHop:
    relation: str
    direction: str
    next_label: str


@dataclass(frozen=True)
class ConceptPath:
    start_label: str
    hops: tuple[PathHop, ...] = ()

    def __len__(self) -> int:
        return len(self.hops)


class RelationTemplates:
    """Forward/inverse phrase pairs per relation name."""

    def __init__(self, table: dict[str, Sequence[str]]):
        cleaned: dict[str, tuple[str, str]] = {}
        for relation, pair in table.items():
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise DataError(f"template for relation {relation!r} must be a [forward, inverse] pair")
            cleaned[str(relation)] = (str(pair[0]), str(pair[1]))
        self._table = cleaned

    def phrase(self, relation: str, direction: str) -> str:
        if direction not in (FORWARD, INVERSE):
            raise ValueError(f"direction must be {FORWARD!r} or {INVERSE!r}, got {direction!r}")
        pair = self._table.get(relation)
        if pair is None and relation.startswith("dbpedia"):
            # dump relations like dbpedia/genre share one template entry
            pair = self._table.get("dbpedia")
        if pair is None:
            pair = FALLBACK_PHRASES
        return pair[0] if direction == FORWARD else pair[1]

    def relations(self) -> list[str]:
        return sorted(self._table)

    def __len__(self) -> int:
        return len(self._table)


def default_templates() -> RelationTemplates:
    text = resources.files("structeci.data").joinpath("relation_templates.json").read_text("utf-8")
    return RelationTemplates(json.loads(text))


def load_templates(path: str | Path) -> RelationTemplates:
    try:
        table = json.loads(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read relation templates {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"relation templates {path} is not valid JSON: {exc}") from exc
    if not isinstance(table, dict):
        raise DataError(f"relation templates {path} must be a JSON object")
    return RelationTemplates(table)


def serialize_path(path: ConceptPath, templates: RelationTemplates) -> str:
    if not path.hops:
        return f'"{path.start_label}".'
    clauses = []
    current = path.start_label
    for hop in path.hops:
        phrase = templates.phrase(hop.relation, hop.direction)
        clauses.append(f'"{current}" {phrase} "{hop.next_label}"')
        current = hop.next_label
    return ", and ".join(clauses) + "."


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, item_a in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, item_b in enumerate(b, start=1):
            current[j] = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (0 if item_a == item_b else 1),
            )
        previous = current
    return previous[-1]


def _hop_clauses(path: ConceptPath, templates: RelationTemplates) -> list[str]:
    if not path.hops:
        return [f'"{path.start_label}"']
    clauses = []
    current = path.start_label
    for hop in path.hops:
        phrase = templates.phrase(hop.relation, hop.direction)
        clauses.append(f'"{current}" {phrase} "{hop.next_label}"')
        current = hop.next_label
    return clauses


def path_similarity(
    path1: ConceptPath | None,
    path2: ConceptPath | None,
    templates: RelationTemplates,
    normalize: str = "chars",
) -> float:
    """Similarity in [0, 1]; exactly 0.0 when either path is absent.

    normalize picks the edit-distance granularity: "chars" compares the
    serialized strings character by character, "hops" compares them
    clause by clause.
    """
    if path1 is None or path2 is None:
        return 0.0
    if normalize == "chars":
        s1 = serialize_path(path1, templates)
        s2 = serialize_path(path2, templates)
        units1: Sequence = s1
        units2: Sequence = s2
    elif normalize == "hops":
        units1 = _hop_clauses(path1, templates)
        units2 = _hop_clauses(path2, templates)
    else:
        raise ValueError(f"normalize must be 'chars' or 'hops', got {normalize!r}")
    longest = max(len(units1), len(units2))
    distance = levenshtein(units1, units2)
    return 1.0 - distance / longest
