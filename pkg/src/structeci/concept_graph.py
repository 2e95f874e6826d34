"""English concept graph: dump loading, event matching, bounded BFS.

The graph is undirected for traversal purposes, but every edge keeps its
original orientation so path serialization can pick forward or inverse
relation phrases.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from .corpus import EmbeddingStore, EventSpan
from .errors import DataError
from .path_metric import FORWARD, INVERSE, ConceptPath, PathHop

logger = logging.getLogger(__name__)

ENGLISH_PREFIX = "/c/en/"
DEFAULT_MAX_PATH_LEN = 4


@dataclass(frozen=True)
class RelationEdge:
    relation: str
    start: str
    end: str


@dataclass(frozen=True)
class NodeMatch:
    node_id: str
    label: str
    similarity: float


def node_label(node_id: str) -> str:
    return node_id.rstrip("/").rsplit("/", 1)[-1].replace("_", " ")


class ConceptGraph:
    def __init__(self, edges: list[RelationEdge]):
        labels: dict[str, str] = {}
        adjacency: dict[str, list[tuple[str, RelationEdge]]] = {}
        unique = sorted(set(edges), key=lambda e: (e.start, e.end, e.relation))
        for edge in unique:
            for node in (edge.start, edge.end):
                if node not in labels:
                    labels[node] = node_label(node)
                    adjacency[node] = []
            adjacency[edge.start].append((edge.end, edge))
            if edge.end != edge.start:
                adjacency[edge.end].append((edge.start, edge))
        for node in adjacency:
            adjacency[node].sort(key=lambda item: (item[0], item[1].relation, item[1].start))
        self._labels = labels
        self._adjacency = adjacency
        self._edges = unique

    @property
    def node_count(self) -> int:
        return len(self._labels)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def nodes(self) -> list[str]:
        return sorted(self._labels)

    def has_node(self, node_id: str) -> bool:
        return node_id in self._labels

    def label(self, node_id: str) -> str:
        try:
            return self._labels[node_id]
        except KeyError:
            raise DataError(f"unknown graph node {node_id!r}") from None

    def neighbors(self, node_id: str) -> list[tuple[str, RelationEdge]]:
        try:
            return self._adjacency[node_id]
        except KeyError:
            raise DataError(f"unknown graph node {node_id!r}") from None

    def to_snapshot(self) -> dict:
        return {"edges": [[e.relation, e.start, e.end] for e in self._edges]}

    @classmethod
    def from_snapshot(cls, snapshot: dict) -> "ConceptGraph":
        try:
            edges = [RelationEdge(relation=r, start=s, end=e) for r, s, e in snapshot["edges"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"bad graph snapshot: {exc}") from exc
        return cls(edges)


def build_graph(path: str | Path) -> ConceptGraph:
    """Load a tab-separated assertion dump, keeping only English edges."""
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise DataError(f"cannot read concept dump {path}: {exc}") from exc
    edges: list[RelationEdge] = []
    skipped = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) < 5:
            skipped += 1
            continue
        relation_uri, start, end = cols[1], cols[2], cols[3]
        if not (start.startswith(ENGLISH_PREFIX) and end.startswith(ENGLISH_PREFIX)):
            continue
        relation = relation_uri.removeprefix("/r/")
        edges.append(RelationEdge(relation=relation, start=start, end=end))
    if skipped:
        logger.warning("skipped %d dump rows with fewer than 5 columns", skipped)
    return ConceptGraph(edges)


def cosine_similarity(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(y * y for y in b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def embedding_key(text: str) -> str:
    return text.lower()


def match_node(
    event: EventSpan,
    embeddings: EmbeddingStore,
    graph: ConceptGraph,
    threshold: float = 0.6,
) -> NodeMatch | None:
    """Best-matching graph node for an event surface, or None below threshold.

    Equal similarities resolve to the lexicographically smallest node id.
    """
    key = embedding_key(event.surface)
    event_vec = embeddings.get(key)
    if event_vec is None:
        raise DataError(f"no embedding for event key {key!r}")
    best: NodeMatch | None = None
    for node_id in graph.nodes():
        label = graph.label(node_id)
        node_vec = embeddings.get(embedding_key(label))
        if node_vec is None:
            continue
        similarity = cosine_similarity(event_vec, node_vec)
        if best is None or similarity > best.similarity:
            best = NodeMatch(node_id=node_id, label=label, similarity=similarity)
    if best is None or best.similarity < threshold:
        return None
    return best


def shortest_path(
    graph: ConceptGraph,
    start: str,
    goal: str,
    max_len: int = DEFAULT_MAX_PATH_LEN,
) -> ConceptPath | None:
    """Shortest undirected path with at most max_len hops, or None.

    Ties between equal-length paths resolve by expanding neighbors in
    lexicographic order, so results are deterministic.
    """
    for node in (start, goal):
        if not graph.has_node(node):
            raise DataError(f"unknown graph node {node!r}")
    if start == goal:
        return ConceptPath(start_label=graph.label(start))
    parents: dict[str, tuple[str, RelationEdge]] = {}
    depth = {start: 0}
    queue: deque[str] = deque([start])
    found = False
    while queue and not found:
        current = queue.popleft()
        if depth[current] >= max_len:
            continue
        for neighbor, edge in graph.neighbors(current):
            if neighbor in depth:
                continue
            depth[neighbor] = depth[current] + 1
            parents[neighbor] = (current, edge)
            if neighbor == goal:
                found = True
                break
            queue.append(neighbor)
    if not found:
        return None
    steps: list[tuple[str, RelationEdge, str]] = []
    node = goal
    while node != start:
        prev, edge = parents[node]
        steps.append((prev, edge, node))
        node = prev
    steps.reverse()
    hops = tuple(
        PathHop(
            relation=edge.relation,
            direction=FORWARD if edge.start == source else INVERSE,
            next_label=graph.label(target),
        )
        for source, edge, target in steps
    )
    return ConceptPath(start_label=graph.label(start), hops=hops)
