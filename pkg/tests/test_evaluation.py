from __future__ import annotations

import json
import random

import pytest

from structeci.corpus import EventSpan, Sample
from structeci.errors import DataError
from structeci.evaluation import (
    Confusion,
    EvalReport,
    evaluate,
    f1_from_precision_recall,
    format_report_table,
    load_predictions,
    precision_from_confusion,
    recall_from_confusion,
    report_to_json,
)
from structeci.jsonl import write_jsonl
from structeci.reasoner import Verdict


def gold(sample_id, label, group=None):
    return Sample(
        id=sample_id,
        context="a b",
        source_event=EventSpan("a", 0, 1),
        target_event=EventSpan("b", 2, 3),
        label=label,
        group=group,
    )


def verdict(sample_id, answer):
    return Verdict(
        query_id=sample_id,
        answer=answer,
        raw_response="",
        example_ids=(),
        prompt_digest="",
    )


def test_confusion_counting():
    predictions = [
        verdict("a", "Yes"),  # tp
        verdict("b", "Yes"),  # fp
        verdict("c", "No"),  # fn
        verdict("d", "No"),  # tn
        verdict("e", "Yes"),  # tp
    ]
    labels = {"a": "Yes", "b": "No", "c": "Yes", "d": "No", "e": "Yes"}
    report = evaluate(predictions, [gold(i, label) for i, label in labels.items()])
    assert report.confusion == Confusion(tp=2, fp=1, fn=1, tn=1)
    assert report.precision == pytest.approx(2 / 3)
    assert report.recall == pytest.approx(2 / 3)
    assert report.f1 == pytest.approx(2 / 3)
    assert [r["id"] for r in report.per_sample] == ["a", "b", "c", "d", "e"]
    assert report.per_sample[0] == {"id": "a", "gold": "Yes", "predicted": "Yes", "correct": True}


def test_zero_denominators_give_zero():
    assert precision_from_confusion(Confusion()) == 0.0
    assert recall_from_confusion(Confusion()) == 0.0
    assert f1_from_precision_recall(0.0, 0.0) == 0.0
    # all-No predictions over all-No gold: no positive class anywhere
    report = evaluate([verdict("a", "No")], [gold("a", "No")])
    assert (report.precision, report.recall, report.f1) == (0.0, 0.0, 0.0)


def test_prediction_order_is_irrelevant():
    predictions = [verdict("a", "Yes"), verdict("b", "No"), verdict("c", "Yes")]
    labels = [gold("a", "Yes"), gold("b", "Yes"), gold("c", "No")]
    forward = evaluate(predictions, labels)
    backward = evaluate(list(reversed(predictions)), list(reversed(labels)))
    assert forward == backward


def test_id_mismatch_reports_both_sides():
    predictions = [verdict("a", "Yes"), verdict("z", "No")]
    labels = [gold("a", "Yes"), gold("b", "No")]
    with pytest.raises(DataError, match=r"missing=\['b'\], extra=\['z'\]"):
        evaluate(predictions, labels)


def test_duplicate_prediction_ids_rejected():
    with pytest.raises(DataError, match="duplicate"):
        evaluate([verdict("a", "Yes"), verdict("a", "No")], [gold("a", "Yes")])


def test_unlabeled_gold_rejected():
    with pytest.raises(DataError, match="no label"):
        evaluate([verdict("a", "Yes")], [gold("a", None)])


def test_group_carried_into_per_sample():
    report = evaluate([verdict("a", "Yes")], [gold("a", "Yes", group="dev")])
    assert report.per_sample[0]["group"] == "dev"


def test_f1_between_precision_and_recall():
    rng = random.Random(7)
    for _ in range(200):
        p = rng.random()
        r = rng.random()
        f1 = f1_from_precision_recall(p, r)
        assert min(p, r) - 1e-12 <= f1 <= max(p, r) + 1e-12


def test_published_rows_are_harmonic_means(fixtures_dir):
    payload = json.loads((fixtures_dir / "published_prf_rows.json").read_text())
    assert payload["units"] == "percent"
    rows = payload["rows"]
    assert len(rows) == 26
    for precision_pct, recall_pct, f1_pct in rows:
        computed = f1_from_precision_recall(precision_pct / 100.0, recall_pct / 100.0)
        assert abs(computed - f1_pct / 100.0) <= 0.0015, (precision_pct, recall_pct, f1_pct)


def test_format_report_table():
    report = evaluate(
        [verdict("q1", "Yes"), verdict("q2", "Yes")],
        [gold("q1", "Yes"), gold("q2", "No")],
    )
    table = format_report_table(report)
    lines = table.splitlines()
    assert lines[0].startswith("Samples")
    assert any(line.startswith("Precision") and line.endswith("50.0") for line in lines)
    assert any(line.startswith("Recall") and line.endswith("100.0") for line in lines)
    assert any(line.startswith("F1") and line.endswith("66.7") for line in lines)


def test_report_round_trip_through_json():
    report = evaluate([verdict("a", "Yes")], [gold("a", "Yes")])
    payload = report_to_json(report)
    assert payload["confusion"] == {"tp": 1, "fp": 0, "fn": 0, "tn": 0}
    assert payload["f1"] == 1.0
    assert payload["per_sample"][0]["id"] == "a"


def test_load_predictions(tmp_path):
    path = tmp_path / "predictions.jsonl"
    write_jsonl(
        path,
        [
            {"id": "q1", "answer": "Yes", "example_ids": ["p1"], "prompt_digest": "d1"},
            {"id": "q2", "answer": "No"},
        ],
    )
    verdicts = load_predictions(path)
    assert [(v.query_id, v.answer) for v in verdicts] == [("q1", "Yes"), ("q2", "No")]
    assert verdicts[0].example_ids == ("p1",)

    bad = tmp_path / "bad.jsonl"
    write_jsonl(bad, [{"id": "q1", "answer": "Maybe"}])
    with pytest.raises(DataError, match="Yes or No"):
        load_predictions(bad)
    dupes = tmp_path / "dupes.jsonl"
    write_jsonl(dupes, [{"id": "q1", "answer": "Yes"}, {"id": "q1", "answer": "No"}])
    with pytest.raises(DataError, match="duplicate"):
        load_predictions(dupes)
