"""Binary precision/recall/F1 evaluation of causality verdicts."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from .corpus import Sample
from .errors import DataError
from .jsonl import read_jsonl
from .reasoner import Verdict

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def precision_from_confusion(confusion: Confusion) -> float:
    denominator = confusion.tp + confusion.fp
    return confusion.tp / denominator if denominator else 0.0


def recall_from_confusion(confusion: Confusion) -> float:
    denominator = confusion.tp + confusion.fn
    return confusion.tp / denominator if denominator else 0.0


def f1_from_precision_recall(precision: float, recall: float) -> float:
    denominator = precision + recall
    return 2.0 * precision * recall / denominator if denominator else 0.0


@dataclass(frozen=True)
class EvalReport:
    confusion: Confusion
    precision: float
    recall: float
    f1: float
    per_sample: tuple[dict, ...]


def evaluate(predictions: list[Verdict], gold: list[Sample]) -> EvalReport:
    """Compare predicted answers against gold labels, id by id.

    Prediction and gold id sets must coincide; Yes counts as the
    positive class.
    """
    gold_by_id: dict[str, Sample] = {}
    for sample in gold:
        if sample.label is None:
            raise DataError(f"gold sample {sample.id} has no label")
        gold_by_id[sample.id] = sample
    predicted_ids = {v.query_id for v in predictions}
    if len(predicted_ids) != len(predictions):
        raise DataError("duplicate prediction ids")
    missing = sorted(set(gold_by_id) - predicted_ids)
    extra = sorted(predicted_ids - set(gold_by_id))
    if missing or extra:
        raise DataError(f"prediction/gold id mismatch: missing={missing}, extra={extra}")

    tp = fp = fn = tn = 0
    per_sample: list[dict] = []
    for verdict in sorted(predictions, key=lambda v: v.query_id):
        sample = gold_by_id[verdict.query_id]
        predicted_yes = verdict.answer == "Yes"
        actual_yes = sample.label == "Yes"
        if predicted_yes and actual_yes:
            tp += 1
        elif predicted_yes and not actual_yes:
            fp += 1
        elif not predicted_yes and actual_yes:
            fn += 1
        else:
            tn += 1
        record = {
            "id": verdict.query_id,
            "gold": sample.label,
            "predicted": verdict.answer,
            "correct": predicted_yes == actual_yes,
        }
        if sample.group is not None:
            record["group"] = sample.group
        per_sample.append(record)

    confusion = Confusion(tp=tp, fp=fp, fn=fn, tn=tn)
    precision = precision_from_confusion(confusion)
    recall = recall_from_confusion(confusion)
    return EvalReport(
        confusion=confusion,
        precision=precision,
        recall=recall,
        f1=f1_from_precision_recall(precision, recall),
        per_sample=tuple(per_sample),
    )


def report_to_json(report: EvalReport) -> dict:
    return {
        "confusion": {
            "tp": report.confusion.tp,
            "fp": report.confusion.fp,
            "fn": report.confusion.fn,
            "tn": report.confusion.tn,
        },
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "per_sample": list(report.per_sample),
    }


def format_report_table(report: EvalReport) -> str:
    """Aligned plain-text summary with percent metrics, e.g. 'F1 66.7'."""
    rows = [
        ("Samples", str(report.confusion.total)),
        ("TP", str(report.confusion.tp)),
        ("FP", str(report.confusion.fp)),
        ("FN", str(report.confusion.fn)),
        ("TN", str(report.confusion.tn)),
        ("Precision", f"{report.precision * 100:.1f}"),
        ("Recall", f"{report.recall * 100:.1f}"),
        ("F1", f"{report.f1 * 100:.1f}"),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}} {value}" for name, value in rows)


def load_predictions(path: str | Path) -> list[Verdict]:
    """Read the predictions file back into Verdict objects."""
    verdicts: list[Verdict] = []
    seen: set[str] = set()
    for line_no, obj in read_jsonl(path):
        if not isinstance(obj, dict) or "id" not in obj or "answer" not in obj:
            raise DataError(f"{path}: line {line_no}: expected an object with id and answer")
        query_id = str(obj["id"])
        if query_id in seen:
            raise DataError(f"{path}: line {line_no}: duplicate prediction id {query_id!r}")
        seen.add(query_id)
        answer = str(obj["answer"])
        if answer not in ("Yes", "No"):
            raise DataError(f"{path}: line {line_no}: answer must be Yes or No, got {answer!r}")
        verdicts.append(
            Verdict(
                query_id=query_id,
                answer=answer,
                raw_response="",
                example_ids=tuple(str(e) for e in obj.get("example_ids", [])),
                prompt_digest=str(obj.get("prompt_digest", "")),
            )
        )
    return verdicts
