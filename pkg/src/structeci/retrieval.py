"""Structural example retrieval.

Candidates are scored by a weighted sum of concept-path similarity and
dependency-tree similarity, then filtered by shared causal pattern with
quota-based class balancing and explicit fallbacks.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .concept_graph import ConceptGraph, match_node, shortest_path
from .corpus import EmbeddingStore, ParseStore, Sample
from .errors import ConfigError, DataError
from .llm_gateway import Gateway
from .path_metric import ConceptPath, RelationTemplates, path_similarity
from .pattern import CausalPattern, PatternAssignment, PatternCache, query_pattern
from .syntax_metric import DepTree, LabelWeights, syntactic_similarity

logger = logging.getLogger(__name__)

RETRIEVER_NAME = "structural"


@dataclass(frozen=True)
class RetrievalConfig:
    w1: float = 0.5
    w2: float = 0.5
    threshold: float = 0.6
    k_top: int = 2
    max_path_len: int = 4
    path_normalize: str = "chars"

    def __post_init__(self):
        if self.w1 < 0 or self.w2 < 0:
            raise ConfigError("similarity weights must be non-negative")
        if self.w1 + self.w2 == 0:
            raise ConfigError("at least one similarity weight must be positive")
        if not (0.0 <= self.threshold <= 1.0):
            raise ConfigError("matching threshold must lie in [0, 1]")
        if self.k_top < 1:
            raise ConfigError("k_top must be >= 1")
        if self.max_path_len < 0:
            raise ConfigError("max_path_len must be >= 0")
        if self.path_normalize not in ("chars", "hops"):
            raise ConfigError("path_normalize must be 'chars' or 'hops'")


@dataclass
class ScoredCandidate:
    sample: Sample
    s_path: float
    s_syn: float
    score: float
    pattern: CausalPattern | None = None


@dataclass
class ExampleSet:
    members: list[ScoredCandidate]
    backfilled: bool = False
    unfiltered_fallback: bool = False
    shortfall: bool = False

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def ids(self) -> list[str]:
        return [c.sample.id for c in self.members]


def event_concept_path(
    sample: Sample,
    graph: ConceptGraph,
    embeddings: EmbeddingStore,
    cfg: RetrievalConfig,
) -> ConceptPath | None:
    """Concept path between a sample's two events, or None.

    Absent when either event fails to match a graph node or no path
    exists within the hop bound.
    """
    source = match_node(sample.source_event, embeddings, graph, cfg.threshold)
    if source is None:
        return None
    target = match_node(sample.target_event, embeddings, graph, cfg.threshold)
    if target is None:
        return None
    return shortest_path(graph, source.node_id, target.node_id, cfg.max_path_len)


def candidate_paths(
    corpus: list[Sample],
    graph: ConceptGraph,
    embeddings: EmbeddingStore,
    cfg: RetrievalConfig,
) -> dict[str, ConceptPath | None]:
    """Precompute each candidate's concept path (query independent)."""
    return {sample.id: event_concept_path(sample, graph, embeddings, cfg) for sample in corpus}


def _require_tree(parses: ParseStore, sample_id: str) -> DepTree:
    tree = parses.get(sample_id)
    if tree is None:
        raise DataError(f"no dependency parse for sample {sample_id!r}")
    return tree


def score_candidates(
    query: Sample,
    corpus: list[Sample],
    graph: ConceptGraph,
    embeddings: EmbeddingStore,
    parses: ParseStore,
    templates: RelationTemplates,
    weights: LabelWeights,
    cfg: RetrievalConfig,
    assignment: PatternAssignment | None = None,
    paths: dict[str, ConceptPath | None] | None = None,
    jobs: int = 1,
) -> list[ScoredCandidate]:
    """Score every corpus sample against the query, best first.

    Ties break toward the lexicographically smaller sample id.
    """
    query_tree = _require_tree(parses, query.id)
    query_path = event_concept_path(query, graph, embeddings, cfg)
    if paths is None:
        paths = candidate_paths(corpus, graph, embeddings, cfg)

    def score_one(sample: Sample) -> ScoredCandidate:
        tree = _require_tree(parses, sample.id)
        s_path = path_similarity(query_path, paths.get(sample.id), templates, cfg.path_normalize)
        s_syn = syntactic_similarity(query_tree, tree, weights)
        return ScoredCandidate(
            sample=sample,
            s_path=s_path,
            s_syn=s_syn,
            score=cfg.w1 * s_path + cfg.w2 * s_syn,
            pattern=None if assignment is None else assignment.pattern_of(sample.id),
        )

    if jobs > 1 and len(corpus) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scored = list(pool.map(score_one, corpus))
    else:
        scored = [score_one(sample) for sample in corpus]
    scored.sort(key=lambda c: (-c.score, c.sample.id))
    return scored


def select_examples(
    pattern: CausalPattern,
    scored: list[ScoredCandidate],
    assignment: PatternAssignment,
    k_top: int,
) -> ExampleSet:
    """Pick up to k_top examples sharing the query's causal pattern.

    The positive quota is floor(k_top / 2); negatives get the rest.
    A short class backfills from the other class inside the filtered
    pool. An empty filtered pool falls back to the unfiltered ranking
    with the same quotas. Every fallback is logged.
    """
    if not scored:
        raise DataError("cannot select examples from an empty candidate list")

    def pattern_of(candidate: ScoredCandidate) -> CausalPattern:
        if candidate.pattern is not None:
            return candidate.pattern
        return assignment.pattern_of(candidate.sample.id)

    matched = [c for c in scored if pattern_of(c) == pattern]
    unfiltered_fallback = False
    pool = matched
    if not matched:
        unfiltered_fallback = True
        pool = list(scored)
        logger.info("no candidate shares pattern %s; using unfiltered ranking", pattern.value)

    k_pos = k_top // 2
    k_neg = k_top - k_pos
    positives = [c for c in pool if c.sample.label == "Yes"]
    negatives = [c for c in pool if c.sample.label == "No"]
    chosen_pos = positives[:k_pos]
    chosen_neg = negatives[:k_neg]
    backfilled = False
    need = k_top - len(chosen_pos) - len(chosen_neg)
    if need > 0:
        extra_pos = positives[len(chosen_pos):len(chosen_pos) + need]
        if extra_pos:
            chosen_pos = chosen_pos + extra_pos
            need -= len(extra_pos)
            backfilled = True
            logger.info("backfilled %d example slot(s) from the positive class", len(extra_pos))
    if need > 0:
        extra_neg = negatives[len(chosen_neg):len(chosen_neg) + need]
        if extra_neg:
            chosen_neg = chosen_neg + extra_neg
            need -= len(extra_neg)
            backfilled = True
            logger.info("backfilled %d example slot(s) from the negative class", len(extra_neg))
    shortfall = need > 0
    if shortfall:
        logger.warning("only %d example(s) available for k_top=%d", k_top - need, k_top)
    return ExampleSet(
        members=chosen_pos + chosen_neg,
        backfilled=backfilled,
        unfiltered_fallback=unfiltered_fallback,
        shortfall=shortfall,
    )


@dataclass
class PipelineState:
    """Everything retrieval needs beyond the query itself."""

    corpus: list[Sample]
    graph: ConceptGraph
    embeddings: EmbeddingStore
    parses: ParseStore
    templates: RelationTemplates
    weights: LabelWeights
    assignment: PatternAssignment
    gateway: Gateway
    model: str
    temperature: float = 0.0
    query_pattern_cache: PatternCache | None = None
    paths: dict[str, ConceptPath | None] | None = None


@dataclass
class RetrievalResult:
    query: Sample
    query_pattern: CausalPattern
    candidates: list[ScoredCandidate]
    examples: ExampleSet


def retrieve(query: Sample, state: PipelineState, cfg: RetrievalConfig, jobs: int = 1) -> RetrievalResult:
    pattern = query_pattern(query, state.gateway, state.query_pattern_cache, state.model, state.temperature)
    if state.paths is None:
        state.paths = candidate_paths(state.corpus, state.graph, state.embeddings, cfg)
    scored = score_candidates(
        query,
        state.corpus,
        state.graph,
        state.embeddings,
        state.parses,
        state.templates,
        state.weights,
        cfg,
        assignment=state.assignment,
        paths=state.paths,
        jobs=jobs,
    )
    examples = select_examples(pattern, scored, state.assignment, cfg.k_top)
    return RetrievalResult(query=query, query_pattern=pattern, candidates=scored, examples=examples)


def trace_record(result: RetrievalResult) -> dict:
    """One JSON-ready trace record per query, with stable key order."""
    return {
        "query_id": result.query.id,
        "query_pattern": result.query_pattern.value,
        "candidates": [
            {
                "id": c.sample.id,
                "s_path": c.s_path,
                "s_syn": c.s_syn,
                "score": c.score,
                "pattern": None if c.pattern is None else c.pattern.value,
            }
            for c in result.candidates
        ],
        "selected": result.examples.ids(),
        "backfilled": result.examples.backfilled,
        "unfiltered_fallback": result.examples.unfiltered_fallback,
        "shortfall": result.examples.shortfall,
        "retriever": RETRIEVER_NAME,
    }
