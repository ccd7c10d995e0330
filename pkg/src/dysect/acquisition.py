"""Inner-loop content growth: concept instance and relation fact discovery."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from typing import Optional

from dysect.gateway import GatewayError, GatewayRequest, LlmGateway
from dysect.kb.store import KnowledgeBase
from dysect.kb.types import INSTANCE_OF, SourceId, ValidationError, normalize

logger = logging.getLogger(__name__)


@dataclass
class AcquisitionConfig:
    instances_per_concept: int = 10
    pairs_per_relation: int = 10
    example_budget: int = 8
    default_local_confidence: float = 0.5
    models: list[str] = field(default_factory=lambda: ["mock"])

    def __post_init__(self):
        if min(self.instances_per_concept, self.pairs_per_relation, self.example_budget) < 1:
            raise ValidationError("acquisition budgets must be positive")
        if not 0.0 <= self.default_local_confidence <= 1.0:
            raise ValidationError("default_local_confidence must be in [0,1]")


def _parse_string_list(raw: str) -> Optional[list]:
    start, end = raw.find("["), raw.rfind("]")
    if start == -1 or end <= start:
        return None
    try:
        items = json.loads(raw[start : end + 1])
    except json.JSONDecodeError:
        return None
    return items if isinstance(items, list) else None


def _entity_best_confidence(kb: KnowledgeBase, norm: str) -> float:
    best = 0.0
    for t in kb.active_triples():
        if t.subject.norm == norm or t.object.norm == norm:
            best = max(best, t.confidence)
    return best


def acquire_concept_instances(
    kb: KnowledgeBase,
    concept_id: int,
    cfg: AcquisitionConfig,
    gateway: Optional[LlmGateway],
    iteration: int = 0,
) -> list[int]:
    """Ask each model for new instances of a concept seeded with KB examples."""
    if gateway is None or not cfg.models:
        return []
    concept = kb.concepts.get(concept_id)
    if concept is None or concept.kind != "class":
        return []
    instances = kb.instance_descendants(concept_id)
    if not instances:
        return []  # nothing known yet: no basis for exploration

    ranked = sorted(
        instances,
        key=lambda c: (-_entity_best_confidence(kb, normalize(c.label)), c.id),
    )
    examples = [c.label for c in ranked[: cfg.example_budget]]
    known = {c.label.strip().lower() for c in instances}

    created: list[int] = []
    for model in sorted(cfg.models):
        req = GatewayRequest(
            model=model,
            messages=[
                (
                    "user",
                    f"Propose up to {cfg.instances_per_concept} additional instances of the "
                    f"concept {concept.label!r}"
                    + (f" ({concept.description})" if concept.description else "")
                    + ". Output a JSON list of strings.\nKnown instances: "
                    + json.dumps(examples, ensure_ascii=False),
                )
            ],
            tag="concept_acq",
        )
        try:
            raw = gateway.complete(req)
        except GatewayError as exc:
            logger.warning("concept acquisition (%s, %r) skipped: %s", model, concept.label, exc)
            continue
        items = _parse_string_list(raw)
        if items is None:
            logger.warning("unparseable concept acquisition batch dropped: %r", raw[:80])
            continue
        source = SourceId(f"Acquirer_{model}")
        for name in items[: cfg.instances_per_concept]:
            if not isinstance(name, str) or not name.strip():
                continue
            is_new = name.strip().lower() not in known
            tid = kb.upsert_triple(
                name,
                INSTANCE_OF,
                concept.label,
                source,
                cfg.default_local_confidence,
                iteration=iteration,
            )
            if is_new:
                created.append(tid)
                known.add(name.strip().lower())
    return created


def acquire_relation_facts(
    kb: KnowledgeBase,
    predicate: str,
    cfg: AcquisitionConfig,
    gateway: Optional[LlmGateway],
    iteration: int = 0,
    seed: int = 0,
) -> list[int]:
    """Sample unlinked entity pairs for a relation and let models affirm new facts."""
    if gateway is None or not cfg.models:
        return []
    schema = kb.predicates.get(predicate)
    if schema is None or predicate == INSTANCE_OF:
        return []
    existing = sorted(
        (t for t in kb.active_triples() if t.predicate == predicate),
        key=lambda t: (-t.confidence, t.id),
    )
    if not existing:
        return []

    subjects = _eligible_entities(kb, schema.allowed_subject_concepts)
    objects = _eligible_entities(kb, schema.allowed_object_concepts)
    taken = {(t.subject.norm, t.object.norm) for t in existing}
    candidates = [
        (s, o)
        for s in subjects
        for o in objects
        if s.lower() != o.lower() and (s.lower(), o.lower()) not in taken
    ]
    candidates.sort()
    if not candidates:
        return []
    rng = random.Random(f"{seed}:{iteration}:{predicate}")
    sampled = sorted(rng.sample(candidates, min(cfg.pairs_per_relation, len(candidates))))

    examples = [[t.subject.surface, t.object.surface] for t in existing[: cfg.example_budget]]
    created: list[int] = []
    dropped = 0
    for model in sorted(cfg.models):
        req = GatewayRequest(
            model=model,
            messages=[
                (
                    "user",
                    f"For the relation {predicate!r}, which of these candidate "
                    "(subject, object) pairs hold? Output a JSON list of [subject, object] "
                    "pairs.\nExamples that hold: "
                    + json.dumps(examples, ensure_ascii=False)
                    + "\nCandidates: "
                    + json.dumps([list(p) for p in sampled], ensure_ascii=False),
                )
            ],
            tag="relation_acq",
        )
        try:
            raw = gateway.complete(req)
        except GatewayError as exc:
            logger.warning("relation acquisition (%s, %r) skipped: %s", model, predicate, exc)
            continue
        items = _parse_string_list(raw)
        if items is None:
            logger.warning("unparseable relation acquisition batch dropped: %r", raw[:80])
            continue
        offered = {(s.lower(), o.lower()): (s, o) for s, o in sampled}
        source = SourceId(f"Acquirer_{model}")
        for item in items:
            if not (isinstance(item, list) and len(item) == 2):
                continue
            s, o = item
            if not (isinstance(s, str) and isinstance(o, str)):
                continue
            pair = offered.get((s.strip().lower(), o.strip().lower()))
            if pair is None:
                dropped += 1
                continue
            tid = kb.upsert_triple(
                pair[0], predicate, pair[1], source, cfg.default_local_confidence,
                iteration=iteration,
            )
            created.append(tid)
    if dropped:
        logger.info("relation acquisition %r: %d off-candidate proposals dropped", predicate, dropped)
    return created


def _eligible_entities(kb: KnowledgeBase, allowed_concepts: set[str]) -> list[str]:
    if not allowed_concepts:
        return sorted(
            c.label for c in kb.concepts.values() if c.kind == "instance"
        )
    out: set[str] = set()
    for label in allowed_concepts:
        cid = kb.class_concept_id(label)
        if cid is not None:
            out.update(c.label for c in kb.instance_descendants(cid))
    return sorted(out)
