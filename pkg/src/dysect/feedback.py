"""KB-to-extractor feedback: prompt guidance assembly and knowledge-to-text.

Guidance surfaces induced subconcept labels and high-confidence triples
for the encouraging mode, and saturated subconcepts for the prohibitive
mode. kb_to_text turns high-confidence triples into natural-language
sentences paired with their silver triple labels.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from dysect.gateway import GatewayError, GatewayRequest, LlmGateway
from dysect.kb.store import KnowledgeBase
from dysect.kb.types import INSTANCE_OF, Triple

logger = logging.getLogger(__name__)


@dataclass
class GuidanceConfig:
    min_confidence: float = 0.6
    max_items: int = 30
    saturation_count: int = 20


@dataclass
class KbGuidance:
    general_concepts: list[str] = field(default_factory=list)
    positive_examples: list[list[str]] = field(default_factory=list)  # [s, p, o]
    negative_examples: list[str] = field(default_factory=list)  # saturated labels
    mutex_notes: list[str] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (
            self.general_concepts
            or self.positive_examples
            or self.negative_examples
            or self.mutex_notes
        )


def _concept_triple_count(kb: KnowledgeBase, concept_id: int) -> int:
    """Non-invalidated triples touching any entity under this concept."""
    instances = {c.id for c in kb.instance_descendants(concept_id)}
    count = 0
    for t in kb.active_triples():
        for ref in (t.subject, t.object):
            node = kb.entity_node_id(ref.surface)
            if node in instances:
                count += 1
                break
    return count


def build_guidance(
    kb: KnowledgeBase, mode: str, cfg: Optional[GuidanceConfig] = None
) -> KbGuidance:
    cfg = cfg or GuidanceConfig()
    guidance = KbGuidance()

    induced = sorted(
        (c for c in kb.concepts.values() if c.provenance == "integrator" and c.kind == "class"),
        key=lambda c: c.id,
    )
    classes_with_instances = sorted(
        (
            c
            for c in kb.concepts.values()
            if c.kind == "class"
            and c.provenance != "integrator"
            and any(kb.concepts[ch].kind == "instance" for ch in c.children)
        ),
        key=lambda c: c.id,
    )
    guidance.general_concepts = [c.label for c in induced] + [
        c.label for c in classes_with_instances
    ]

    for mid in sorted(kb.mutex_sets):
        ms = kb.mutex_sets[mid]
        labels = [kb.concepts[cid].label for _, cid in ms.members if cid in kb.concepts]
        if len(labels) >= 2:
            guidance.mutex_notes.append(
                f"{labels[0]} is mutually exclusive with {', '.join(labels[1:])}"
            )

    if mode == "positive":
        picked: list[list[str]] = []
        seen_keys = set()
        for t in kb.query_triples(min_confidence=cfg.min_confidence, include_inverses=False):
            if t.predicate == INSTANCE_OF:
                continue
            if t.key in seen_keys:
                continue
            seen_keys.add(t.key)
            picked.append(list(t.spo()))
            if len(picked) >= cfg.max_items:
                break
        guidance.positive_examples = picked
    elif mode == "negative":
        saturated = []
        for c in induced + classes_with_instances:
            if _concept_triple_count(kb, c.id) >= cfg.saturation_count:
                saturated.append(c.label)
        guidance.negative_examples = saturated[: cfg.max_items]
    return guidance


@dataclass
class CorpusRecord:
    text: str
    triples: list[list[str]]
    confidence: float

    def to_dict(self) -> dict:
        return {"text": self.text, "triples": self.triples, "confidence": self.confidence}


def kb_to_text(
    kb: KnowledgeBase,
    gateway: LlmGateway,
    min_confidence: float = 0.8,
    model: str = "mock",
    out_path: Optional[Union[str, Path]] = None,
) -> list[CorpusRecord]:
    """Render high-confidence triples as factual sentences with silver labels."""
    records: list[CorpusRecord] = []
    for t in sorted(kb.active_triples(), key=lambda t: t.id):
        if t.confidence < min_confidence or t.predicate == INSTANCE_OF:
            continue
        if t.inverse_of is not None and t.inverse_of < t.id:
            continue  # one sentence per forward/inverse pair
        spo = list(t.spo())
        req = GatewayRequest(
            model=model,
            messages=[
                (
                    "user",
                    "Write one factual natural-language sentence expressing this fact. "
                    "Output only the sentence.\n" + json.dumps(spo, ensure_ascii=False),
                )
            ],
            tag="kb2text",
        )
        try:
            text = gateway.complete(req).strip()
        except GatewayError as exc:
            logger.warning("kb_to_text skipped triple %d: %s", t.id, exc)
            continue
        if text:
            records.append(CorpusRecord(text=text, triples=[spo], confidence=t.confidence))

    if out_path is not None:
        with Path(out_path).open("w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")
    return records
