"""Recall / extracted-triple metrics over alias-aware matching, plus the
Base / Positive / Negative x iteration report table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

from dysect.evaluation.docred import GoldDocument, load_relation_labels
from dysect.extractor.parsing import ExtractionResult
from dysect.kb.types import ValidationError, normalize


class AlignmentError(ValueError):
    """Prediction doc_id has no gold counterpart."""


@dataclass
class MatcherConfig:
    mode: str = "strict"  # strict: exact normalized alias; relaxed: substring

    def __post_init__(self):
        if self.mode not in ("strict", "relaxed"):
            raise ValidationError(f"unknown matcher mode: {self.mode}")

    def entity_matches(self, predicted: str, aliases: Sequence[str]) -> bool:
        p = normalize(predicted)
        if not p:
            return False
        for alias in aliases:
            a = normalize(alias)
            if p == a:
                return True
            if self.mode == "relaxed" and (p in a or a in p):
                return True
        return False


@dataclass
class EvalReport:
    model: str = ""
    mode: str = "base"
    iteration: int = 0
    recall: float = 0.0
    precision: float = 0.0  # not part of the benchmark table; debugging aid
    avg_extracted: float = 0.0
    matched_gold: int = 0
    total_gold: int = 0
    total_predicted: int = 0
    per_document: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "mode": self.mode,
            "iteration": self.iteration,
            "recall": self.recall,
            "precision": self.precision,
            "avg_extracted": self.avg_extracted,
            "matched_gold": self.matched_gold,
            "total_gold": self.total_gold,
            "total_predicted": self.total_predicted,
            "per_document": self.per_document,
        }


def score(
    predictions: Sequence[ExtractionResult],
    gold: Sequence[GoldDocument],
    matcher: Optional[MatcherConfig] = None,
    model: str = "",
    mode: str = "base",
    iteration: int = 0,
) -> EvalReport:
    """Corpus-pooled recall: each gold triple counts at most once."""
    matcher = matcher or MatcherConfig()
    labels = load_relation_labels()
    label_to_id = {normalize(lbl): rid for rid, lbl in labels.items()}
    gold_by_id = {g.doc_id: g for g in gold}

    preds_by_doc: dict[str, list] = {g.doc_id: [] for g in gold}
    for pred in predictions:
        if pred.doc_id not in gold_by_id:
            raise AlignmentError(f"prediction for unknown doc_id {pred.doc_id!r}")
        preds_by_doc[pred.doc_id].extend(pred.triples)

    report = EvalReport(model=model, mode=mode, iteration=iteration)
    matched_preds = 0
    for doc in gold:
        preds = preds_by_doc[doc.doc_id]
        matched: set[int] = set()
        for s, _, relation, o, _ in preds:
            rid = label_to_id.get(normalize(relation))
            if rid is None:
                continue
            hit = False
            for gi, (h, r, t) in enumerate(doc.gold_triples):
                if r != rid:
                    continue
                if matcher.entity_matches(s, doc.entities[h].aliases) and matcher.entity_matches(
                    o, doc.entities[t].aliases
                ):
                    matched.add(gi)
                    hit = True
            if hit:
                matched_preds += 1
        report.matched_gold += len(matched)
        report.total_gold += len(doc.gold_triples)
        report.total_predicted += len(preds)
        report.per_document[doc.doc_id] = {
            "gold": len(doc.gold_triples),
            "matched": len(matched),
            "predicted": len(preds),
        }

    if report.total_gold:
        report.recall = 100.0 * report.matched_gold / report.total_gold
    if report.total_predicted:
        report.precision = 100.0 * matched_preds / report.total_predicted
    if gold:
        report.avg_extracted = report.total_predicted / len(gold)
    return report


def report_table(reports: Sequence[EvalReport]) -> tuple[str, str]:
    """Aligned text table and machine-readable JSON, grouped by mode/iteration."""
    if not reports:
        raise ValidationError("report_table requires at least one report")
    mode_order = {"base": 0, "none": 0, "positive": 1, "negative": 2}
    ordered = sorted(
        reports, key=lambda r: (mode_order.get(r.mode, 9), r.iteration, r.model)
    )
    lines = [
        f"{'Mode':<10} {'Iter':>4}  {'Model':<18} {'Recall':>7} {'Avg # Ext-Trip':>15}"
    ]
    lines.append("-" * len(lines[0]))
    for r in ordered:
        lines.append(
            f"{r.mode:<10} {r.iteration:>4}  {r.model:<18} {r.recall:>7.2f} "
            f"{r.avg_extracted:>15.2f}"
        )
    text = "\n".join(lines)
    payload = json.dumps([r.to_dict() for r in ordered], ensure_ascii=False, indent=2)
    return text, payload
