from __future__ import annotations

import pytest

from structeci.corpus import EventSpan, Sample
from structeci.errors import DataError
from structeci.llm_gateway import Gateway, MockBackend, ResponseCache
from structeci.pattern import (
    CausalPattern,
    PatternCache,
    PatternParseError,
    assign_patterns,
    build_extraction_prompt,
    parse_pattern,
    query_pattern,
)


def sample(sample_id, context, source, target, label=None):
    start_s = context.index(source)
    start_t = context.index(target)
    built = Sample(
        id=sample_id,
        context=context,
        source_event=EventSpan(source, start_s, start_s + len(source)),
        target_event=EventSpan(target, start_t, start_t + len(target)),
        label=label,
    )
    built.validate()
    return built


Q1 = sample("q1", "Fire caused damage .", "Fire", "damage", "Yes")


def test_positive_prompt_matches_golden(fixtures_dir):
    golden = (fixtures_dir / "prompts" / "pattern_positive.txt").read_text("utf-8")
    assert build_extraction_prompt(Q1, "positive") == golden


def test_inference_prompt_matches_golden(fixtures_dir):
    golden = (fixtures_dir / "prompts" / "pattern_inference.txt").read_text("utf-8")
    assert build_extraction_prompt(Q1, "inference") == golden


def test_prompt_anchors():
    positive = build_extraction_prompt(Q1, "positive")
    inference = build_extraction_prompt(Q1, "inference")
    assert positive.startswith("TEXT: Fire caused damage ., EVENT X: Fire, EVENT Y: damage.")
    assert inference.startswith("TEXT: Fire caused damage ., EVENT X: Fire, EVENT Y: damage.")
    assert 'DO NOT ANSWER "None" or "No"' in positive
    assert "IF NO PATTERN RULES ARE MET" in inference
    assert "IF NO PATTERN RULES ARE MET" not in positive
    with pytest.raises(ValueError):
        build_extraction_prompt(Q1, "freestyle")


def test_parse_pattern_variants():
    assert parse_pattern('{"pattern": "Direct"}') is CausalPattern.DIRECT
    assert parse_pattern('reasoning... {"pattern": "Chain"} done') is CausalPattern.CHAIN
    assert parse_pattern('```json\n{"Pattern": "Fork"}\n```') is CausalPattern.FORK
    assert parse_pattern('{"pattern": "Chain"} wait {"pattern": "Collider"}') is CausalPattern.COLLIDER
    assert parse_pattern('{"pattern": "Coreference of X"}') is CausalPattern.COREFERENCE
    assert parse_pattern('{"pattern": "coreference of Y"}') is CausalPattern.COREFERENCE
    assert parse_pattern('{"pattern": "No"}') is CausalPattern.NO
    assert parse_pattern('{"pattern": "direct."}') is CausalPattern.DIRECT


def test_parse_pattern_failures():
    with pytest.raises(PatternParseError):
        parse_pattern("no json here")
    with pytest.raises(PatternParseError):
        parse_pattern('{"answer": "Yes"}')
    with pytest.raises(PatternParseError):
        parse_pattern('{"pattern": "Spiral"}')
    with pytest.raises(PatternParseError):
        parse_pattern('{"pattern": "Direct"')


def test_pattern_cache_round_trip(tmp_path):
    path = tmp_path / "patterns.jsonl"
    cache = PatternCache(path)
    cache.add("s1", "m", CausalPattern.CHAIN, "llm", "digest1")
    cache.add("s1", "m", CausalPattern.DIRECT, "llm", "digest2")
    assert cache.get("s1", "m") is CausalPattern.CHAIN
    assert cache.get("s1", "other-model") is None
    reloaded = PatternCache(path)
    assert reloaded.get("s1", "m") is CausalPattern.CHAIN
    import json

    record = json.loads(path.read_text("utf-8").splitlines()[0])
    assert set(record) == {"id", "model", "pattern", "provenance", "raw_response_digest"}


CORPUS = [
    sample("p1", "Smoke caused damage in the town .", "Smoke", "damage", "Yes"),
    sample("p2", "The flood caused damage .", "flood", "damage", "Yes"),
    sample("n1", "A storm happened in autumn .", "storm", "happened", "No"),
    sample("n2", "The party ended late .", "party", "ended", "No"),
]


def make_gateway(tmp_path, rules, default=None):
    mock = MockBackend(rules=rules, default=default)
    gateway = Gateway(mock, cache=ResponseCache(tmp_path / "responses.jsonl"), backoff_base=0.0)
    return gateway, mock


def test_assign_patterns_rules_and_provenance(tmp_path):
    gateway, mock = make_gateway(
        tmp_path,
        [
            ("TEXT: Smoke caused damage in the town .", '{"pattern": "Direct"}'),
            ("TEXT: The flood caused damage .", '{"pattern": "Chain"}'),
        ],
    )
    cache = PatternCache(tmp_path / "patterns.jsonl")
    assignment = assign_patterns(CORPUS, gateway, cache, "m")
    assert len(assignment) == 4
    assert assignment.pattern_of("p1") is CausalPattern.DIRECT
    assert assignment.pattern_of("p2") is CausalPattern.CHAIN
    assert assignment.pattern_of("n1") is CausalPattern.NO
    assert assignment.pattern_of("n2") is CausalPattern.NO
    assert assignment.provenance_of("p1") == "llm"
    assert assignment.provenance_of("n1") == "negative-rule"
    # negatives never reach the LLM
    assert mock.calls == 2
    counts = assignment.counts()
    assert counts["Direct"] == 1 and counts["Chain"] == 1 and counts["No"] == 2


def test_assign_patterns_served_from_cache_on_rerun(tmp_path):
    gateway, mock = make_gateway(
        tmp_path,
        [
            ("TEXT: Smoke caused damage in the town .", '{"pattern": "Direct"}'),
            ("TEXT: The flood caused damage .", '{"pattern": "Chain"}'),
        ],
    )
    cache_path = tmp_path / "patterns.jsonl"
    assign_patterns(CORPUS, gateway, PatternCache(cache_path), "m")
    assert mock.calls == 2
    rerun = assign_patterns(CORPUS, gateway, PatternCache(cache_path), "m")
    assert mock.calls == 2
    assert all(rerun.provenance_of(s.id) == "cache" for s in CORPUS)
    assert rerun.pattern_of("p2") is CausalPattern.CHAIN
    assert rerun.pattern_of("n1") is CausalPattern.NO


def test_assign_patterns_requires_labels(tmp_path):
    gateway, _ = make_gateway(tmp_path, [], default='{"pattern": "Direct"}')
    unlabeled = [sample("u1", "It rained today .", "rained", "today")]
    with pytest.raises(DataError, match="u1"):
        assign_patterns(unlabeled, gateway, PatternCache(tmp_path / "p.jsonl"), "m")


def test_assign_patterns_retry_then_direct_fallback(tmp_path, caplog):
    gateway, mock = make_gateway(tmp_path, [], default="no parsable json")
    corpus = [sample("p9", "Heat caused fire .", "Heat", "fire", "Yes")]
    with caplog.at_level("WARNING"):
        assignment = assign_patterns(corpus, gateway, PatternCache(tmp_path / "p.jsonl"), "m")
    assert assignment.pattern_of("p9") is CausalPattern.DIRECT
    assert assignment.provenance_of("p9") == "llm"
    # one original call plus one cache-bypassing retry
    assert mock.calls == 2
    assert any("falling back to Direct" in message for message in caplog.messages)


def test_assign_patterns_entries_sorted_by_id(tmp_path):
    gateway, _ = make_gateway(tmp_path, [], default='{"pattern": "Direct"}')
    shuffled = [CORPUS[2], CORPUS[0], CORPUS[3], CORPUS[1]]
    assignment = assign_patterns(shuffled, gateway, PatternCache(tmp_path / "p.jsonl"), "m")
    assert list(assignment.entries) == ["n1", "n2", "p1", "p2"]


def test_query_pattern_inference_mode(tmp_path):
    gateway, mock = make_gateway(
        tmp_path, [("TEXT: Fire caused damage .", '{"pattern": "Collider"}')]
    )
    cache = PatternCache(tmp_path / "qp.jsonl")
    assert query_pattern(Q1, gateway, cache, "m") is CausalPattern.COLLIDER
    prompt = mock.seen[0].user_content()
    assert "IF NO PATTERN RULES ARE MET" in prompt
    # cache-served on the second call
    assert query_pattern(Q1, gateway, PatternCache(tmp_path / "qp.jsonl"), "m") is CausalPattern.COLLIDER
    assert mock.calls == 1


def test_query_pattern_unparsable_becomes_no(tmp_path, caplog):
    gateway, mock = make_gateway(tmp_path, [], default="garbage")
    with caplog.at_level("WARNING"):
        result = query_pattern(Q1, gateway, None, "m")
    assert result is CausalPattern.NO
    assert mock.calls == 2
