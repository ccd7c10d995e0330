"""Nested extraction loops: outer over document batches, inner over
integration + concept acquisition + relation acquisition, with per-iteration
analytics records.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from dysect.acquisition import (
    AcquisitionConfig,
    acquire_concept_instances,
    acquire_relation_facts,
)
from dysect.extractor import (
    Document,
    ExtractionResult,
    ExtractionSchema,
    PromptTemplate,
    build_prompt,
    extract,
)
from dysect.feedback import GuidanceConfig, KbGuidance, build_guidance
from dysect.gateway import GatewayError, LlmGateway
from dysect.integrator import IntegrationConfig, integrate
from dysect.kb.store import KnowledgeBase
from dysect.kb.types import (
    INSTANCE_OF,
    IterationRecord,
    PredicateSchema,
    SourceId,
    ValidationError,
)

logger = logging.getLogger(__name__)

FEEDBACK_MODES = ("none", "positive", "negative")


@dataclass
class LoopConfig:
    inner_iterations: int = 3
    batch_size: int = 8
    feedback_mode: str = "none"
    extraction_model: str = "mock"
    extraction_confidence: float = 0.7
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    integration: IntegrationConfig = field(default_factory=IntegrationConfig)
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    seed: int = 0

    def __post_init__(self):
        if self.inner_iterations < 1:
            raise ValidationError("inner_iterations must be >= 1")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.feedback_mode not in FEEDBACK_MODES:
            raise ValidationError(f"unknown feedback_mode: {self.feedback_mode}")


@dataclass
class RunReport:
    feedback_mode: str
    model: str
    iteration_records: list[IterationRecord] = field(default_factory=list)
    extraction_results: list[ExtractionResult] = field(default_factory=list)
    failed_docs: list[str] = field(default_factory=list)
    final_triples: int = 0
    final_concepts: int = 0
    snapshot_hash: str = ""

    def to_dict(self) -> dict:
        return {
            "feedback_mode": self.feedback_mode,
            "model": self.model,
            "iteration_records": [r.to_dict() for r in self.iteration_records],
            "extraction_results": [r.to_dict() for r in self.extraction_results],
            "failed_docs": list(self.failed_docs),
            "final_triples": self.final_triples,
            "final_concepts": self.final_concepts,
            "snapshot_hash": self.snapshot_hash,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(
            feedback_mode=d["feedback_mode"],
            model=d["model"],
            iteration_records=[IterationRecord.from_dict(r) for r in d["iteration_records"]],
            extraction_results=[
                ExtractionResult.from_dict(r) for r in d["extraction_results"]
            ],
            failed_docs=list(d.get("failed_docs", [])),
            final_triples=d.get("final_triples", 0),
            final_concepts=d.get("final_concepts", 0),
            snapshot_hash=d.get("snapshot_hash", ""),
        )


def _prior_examples(kb: KnowledgeBase, guidance: KbGuidance, cap: int = 30) -> list[list[str]]:
    picked = []
    for t in kb.query_triples(include_inverses=False):
        if t.predicate == INSTANCE_OF:
            continue
        picked.append(list(t.spo()))
        if len(picked) >= cap:
            break
    return picked


def run_inner(
    kb: KnowledgeBase,
    cfg: LoopConfig,
    gateway: Optional[LlmGateway],
    outer_index: int = 0,
    inner_index: int = 0,
    triples_before: int = 0,
) -> IterationRecord:
    """integrate -> concept acquisition -> relation acquisition, then metrics."""
    concepts_before = len(kb.concepts)
    mutex_before = len(kb.mutex_sets)
    degraded: list[str] = []

    try:
        report = integrate(kb, cfg.integration, gateway)
        subconcepts_new = len(report.subconcepts)
    except Exception as exc:
        logger.error("integration degraded: %s", exc)
        degraded.append("integrate")
        subconcepts_new = 0

    for cid in sorted(
        c.id for c in kb.concepts.values() if c.kind == "class"
    ):
        try:
            acquire_concept_instances(
                kb, cid, cfg.acquisition, gateway, iteration=outer_index
            )
        except Exception as exc:
            logger.error("concept acquisition degraded for %d: %s", cid, exc)
            degraded.append(f"concept_acq:{cid}")

    for pred in sorted(kb.predicates):
        try:
            acquire_relation_facts(
                kb, pred, cfg.acquisition, gateway, iteration=outer_index, seed=cfg.seed
            )
        except Exception as exc:
            logger.error("relation acquisition degraded for %r: %s", pred, exc)
            degraded.append(f"relation_acq:{pred}")

    record = IterationRecord(
        outer_index=outer_index,
        inner_index=inner_index,
        triples_total=len(kb.triples),
        triples_new=len(kb.triples) - triples_before,
        concepts_total=len(kb.concepts),
        subconcepts_new=subconcepts_new,
        mutex_sets_new=len(kb.mutex_sets) - mutex_before,
        invalidated_total=sum(1 for t in kb.triples.values() if t.status == "invalidated"),
        confidence_histogram=kb.confidence_histogram(),
        per_source_counts=kb.per_source_counts(),
    )
    if degraded:
        record.per_source_counts["_degraded"] = len(degraded)
    kb.record_iteration(record)
    return record


def run_outer(
    docs: Sequence[Document],
    kb: KnowledgeBase,
    cfg: LoopConfig,
    gateway: LlmGateway,
    schema: ExtractionSchema,
    templates: Optional[PromptTemplate] = None,
    start_outer_index: int = 0,
) -> RunReport:
    if not docs:
        raise ValidationError("corpus must be non-empty")
    templates = templates or PromptTemplate.load()
    report = RunReport(feedback_mode=cfg.feedback_mode, model=cfg.extraction_model)
    source = SourceId(f"Extractor_{cfg.extraction_model}")
    for rel in sorted(schema.allowed_relations):
        if rel not in kb.predicates:
            kb.add_predicate(PredicateSchema(id=rel))

    batches = [docs[i : i + cfg.batch_size] for i in range(0, len(docs), cfg.batch_size)]
    for batch_idx, batch in enumerate(batches):
        outer_index = start_outer_index + batch_idx
        if cfg.feedback_mode == "none":
            guidance = KbGuidance()
        else:
            guidance = build_guidance(kb, cfg.feedback_mode, cfg.guidance)
        prior = (
            _prior_examples(kb, guidance, cfg.guidance.max_items)
            if cfg.feedback_mode != "none"
            else []
        )
        mode = cfg.feedback_mode
        if mode != "none" and not prior and guidance.is_empty():
            mode = "base"  # nothing to feed back yet; fall back to the base prompt
        elif mode == "none":
            mode = "base"

        for doc in batch:
            try:
                prompt = build_prompt(
                    doc.text,
                    mode,
                    concept_types=sorted(schema.allowed_concept_types),
                    relations=sorted(schema.allowed_relations),
                    kb_guidance=guidance,
                    prior_triples=prior,
                    templates=templates,
                    example_cap=cfg.guidance.max_items,
                )
                result = extract(
                    doc, prompt, gateway, cfg.extraction_model, schema, iteration=outer_index
                )
            except GatewayError as exc:
                logger.error("extraction failed for %s: %s", doc.doc_id, exc)
                report.failed_docs.append(doc.doc_id)
                continue
            report.extraction_results.append(result)
            for s, s_type, relation, o, o_type in result.triples:
                kb.upsert_triple(
                    s,
                    relation,
                    o,
                    source,
                    cfg.extraction_confidence,
                    subject_type=s_type,
                    object_type=o_type,
                    iteration=outer_index,
                )

        triples_before = len(kb.triples)
        for inner_index in range(cfg.inner_iterations):
            record = run_inner(
                kb,
                cfg,
                gateway,
                outer_index=outer_index,
                inner_index=inner_index,
                triples_before=triples_before,
            )
            triples_before = record.triples_total
            report.iteration_records.append(record)

    report.final_triples = len(kb.triples)
    report.final_concepts = len(kb.concepts)
    report.snapshot_hash = kb.snapshot_hash()
    return report
