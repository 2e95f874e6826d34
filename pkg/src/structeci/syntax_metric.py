"""Dependency-tree similarity.

Trees come from CoNLL-U text. Distance is the exact ordered tree edit
distance (Zhang-Shasha) with per-label integer costs; similarity decays
exponentially with distance.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DataError

logger = logging.getLogger(__name__)

DECAY_RATE = 0.05

# Artificial root label used to join multi-sentence documents.
DOC_LABEL = "DOC"


@dataclass
class DepNode:
    label: str
    token_index: int
    children: list["DepNode"] = field(default_factory=list)


@dataclass
class DepTree:
    root: DepNode
    size: int


class LabelWeights:
    """Per-label edit costs. Labels absent from the table cost 0."""

    def __init__(self, table: Mapping[str, int]):
        cleaned: dict[str, int] = {}
        for label, value in table.items():
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise DataError(f"label weight for {label!r} must be a non-negative integer, got {value!r}")
            cleaned[str(label)] = value
        self._table = cleaned

    def cost(self, label: str) -> int:
        return self._table.get(label, 0)

    def labels(self) -> list[str]:
        return sorted(self._table)


def default_label_weights() -> LabelWeights:
    text = resources.files("structeci.data").joinpath("label_weights.json").read_text("utf-8")
    return LabelWeights(json.loads(text))


def load_label_weights(path: str | Path) -> LabelWeights:
    try:
        table = json.loads(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read label weights {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"label weights {path} is not valid JSON: {exc}") from exc
    if not isinstance(table, dict):
        raise DataError(f"label weights {path} must be a JSON object")
    return LabelWeights(table)


def update_cost(label1: str | None, label2: str | None, weights: LabelWeights) -> int:
    """Relabel cost: 0 for equal labels, sum of both costs otherwise.

    A None argument means the node is absent, turning the operation into a
    plain insert or delete of the present label.
    """
    if label1 is None and label2 is None:
        raise ValueError("update_cost needs at least one label")
    if label1 is None:
        return weights.cost(label2)
    if label2 is None:
        return weights.cost(label1)
    if label1 == label2:
        return 0
    return weights.cost(label1) + weights.cost(label2)


def _token_rows(text: str):
    """Yield sentences as lists of (line_no, token_id, head, deprel)."""
    sentences: list[list[tuple[int, int, int, str]]] = []
    current: list[tuple[int, int, int, str]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            if current:
                sentences.append(current)
                current = []
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise DataError(f"line {line_no}: expected 10 tab-separated columns, got {len(cols)}")
        token_id = cols[0]
        if "-" in token_id or "." in token_id:
            # multiword-token ranges and empty nodes carry no tree structure
            continue
        try:
            tid = int(token_id)
        except ValueError as exc:
            raise DataError(f"line {line_no}: bad token id {token_id!r}") from exc
        try:
            head = int(cols[6])
        except ValueError as exc:
            raise DataError(f"line {line_no}: bad head {cols[6]!r}") from exc
        current.append((line_no, tid, head, cols[7]))
    if current:
        sentences.append(current)
    return sentences


def _build_sentence(rows: list[tuple[int, int, int, str]], offset: int) -> tuple[DepNode, int]:
    nodes: dict[int, DepNode] = {}
    for line_no, tid, head, deprel in rows:
        if tid in nodes:
            raise DataError(f"line {line_no}: duplicate token id {tid}")
        label = "ROOT" if head == 0 else deprel.lower()
        nodes[tid] = DepNode(label=label, token_index=tid + offset)
    roots = [tid for _, tid, head, _ in rows if head == 0]
    if len(roots) != 1:
        first_line = rows[0][0]
        raise DataError(f"sentence at line {first_line}: expected exactly one root (head 0), got {len(roots)}")
    for line_no, tid, head, _ in rows:
        if head == 0:
            continue
        if head not in nodes:
            raise DataError(f"line {line_no}: head {head} refers to a missing token")
        nodes[head].children.append(nodes[tid])
    for node in nodes.values():
        node.children.sort(key=lambda child: child.token_index)
    root = nodes[roots[0]]
    reached = set()
    frontier = [root]
    while frontier:
        node = frontier.pop()
        reached.add(id(node))
        frontier.extend(node.children)
    if len(reached) != len(nodes):
        first_line = rows[0][0]
        raise DataError(f"sentence at line {first_line}: dependency cycle detected")
    return root, max(tid for _, tid, _, _ in rows)


def build_tree(text: str) -> DepTree:
    """Build a DepTree from CoNLL-U text.

    Multi-sentence input is joined under an artificial DOC root whose
    children are the sentence roots in document order.
    """
    sentences = _token_rows(text)
    if not sentences:
        raise DataError("no token lines found")
    roots: list[DepNode] = []
    offset = 0
    total = 0
    for rows in sentences:
        root, max_tid = _build_sentence(rows, offset)
        roots.append(root)
        offset += max_tid
        total += len(rows)
    if len(roots) == 1:
        return DepTree(root=roots[0], size=total)
    doc = DepNode(label=DOC_LABEL, token_index=0, children=roots)
    return DepTree(root=doc, size=total + 1)


class _Annotated:
    """Postorder labels, leftmost-leaf indices and keyroots of a tree."""

    __slots__ = ("labels", "lmld", "keyroots")

    def __init__(self, root: DepNode):
        post: list[DepNode] = []
        stack: list[tuple[DepNode, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                post.append(node)
            else:
                stack.append((node, True))
                for child in reversed(node.children):
                    stack.append((child, False))
        index = {id(node): i for i, node in enumerate(post)}
        labels: list[str] = []
        lmld: list[int] = []
        for i, node in enumerate(post):
            labels.append(node.label)
            if node.children:
                lmld.append(lmld[index[id(node.children[0])]])
            else:
                lmld.append(i)
        last_for_leaf: dict[int, int] = {}
        for i, leaf in enumerate(lmld):
            last_for_leaf[leaf] = i
        self.labels = labels
        self.lmld = lmld
        self.keyroots = sorted(last_for_leaf.values())


def tree_edit_distance(tree1: DepTree, tree2: DepTree, weights: LabelWeights) -> int:
    """Exact ordered tree edit distance with integer label costs."""
    a = _Annotated(tree1.root)
    b = _Annotated(tree2.root)
    cost = weights.cost
    al, bl = a.labels, b.labels
    la, lb = a.lmld, b.lmld
    na, nb = len(al), len(bl)
    td = [[0] * nb for _ in range(na)]
    for i in a.keyroots:
        for j in b.keyroots:
            m = i - la[i] + 2
            n = j - lb[j] + 2
            fd = [[0] * n for _ in range(m)]
            ioff = la[i] - 1
            joff = lb[j] - 1
            for x in range(1, m):
                fd[x][0] = fd[x - 1][0] + cost(al[x + ioff])
            for y in range(1, n):
                fd[0][y] = fd[0][y - 1] + cost(bl[y + joff])
            for x in range(1, m):
                for y in range(1, n):
                    if la[x + ioff] == la[i] and lb[y + joff] == lb[j]:
                        fd[x][y] = min(
                            fd[x - 1][y] + cost(al[x + ioff]),
                            fd[x][y - 1] + cost(bl[y + joff]),
                            fd[x - 1][y - 1] + update_cost(al[x + ioff], bl[y + joff], weights),
                        )
                        td[x + ioff][y + joff] = fd[x][y]
                    else:
                        p = la[x + ioff] - 1 - ioff
                        q = lb[y + joff] - 1 - joff
                        fd[x][y] = min(
                            fd[x - 1][y] + cost(al[x + ioff]),
                            fd[x][y - 1] + cost(bl[y + joff]),
                            fd[p][q] + td[x + ioff][y + joff],
                        )
    return td[na - 1][nb - 1]


def similarity_from_distance(distance: float) -> float:
    return math.exp(-DECAY_RATE * distance)


def syntactic_similarity(tree1: DepTree, tree2: DepTree, weights: LabelWeights) -> float:
    return similarity_from_distance(tree_edit_distance(tree1, tree2, weights))


def batch_syntactic_similarity(
    query: DepTree,
    candidates: Iterable[DepTree],
    weights: LabelWeights,
    jobs: int = 1,
) -> list[float]:
    """Score one query tree against many candidates, preserving order."""
    items = list(candidates)
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda t: syntactic_similarity(query, t, weights), items))
    return [syntactic_similarity(query, t, weights) for t in items]
