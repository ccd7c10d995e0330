"""Knowledge integration: merging, typing, hierarchy induction, mutex, inverses.

One `integrate` call runs, in order: entity typing for untyped mentions,
equivalence merging, mutex detection over sibling concepts, a full
confidence recompute, hierarchy abstraction (connected components of a
thresholded k-NN similarity graph over child embeddings, labeled by the
gateway), and inverse-relation materialization.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from dysect.gateway import GatewayError, GatewayRequest, LlmGateway
from dysect.kb.store import KnowledgeBase
from dysect.kb.types import (
    INSTANCE_OF,
    Concept,
    PredicateSchema,
    ValidationError,
)

logger = logging.getLogger(__name__)


@dataclass
class IntegrationConfig:
    child_count_threshold: int = 10
    heterogeneity_threshold: float = 0.5
    knn_k: int = 5
    knn_sim_threshold: float = 0.75
    merge_sim_threshold: float = 0.92
    cluster_sample_size: int = 5
    min_cluster_size: int = 3
    mutex_accept_threshold: float = 0.8
    labeling_model: str = "mock"

    def __post_init__(self):
        if self.child_count_threshold < 1 or self.knn_k < 1:
            raise ValidationError("thresholds must be positive")
        if not 0.0 <= self.heterogeneity_threshold <= 1.0:
            raise ValidationError("heterogeneity_threshold must be in [0,1]")
        if self.min_cluster_size < 1 or self.cluster_sample_size < 1:
            raise ValidationError("cluster sizes must be positive")


@dataclass
class ClusterProposal:
    parent: int
    member_children: list[int]
    proposed_label: str
    proposed_description: str
    sample_shown_to_llm: list[str]


@dataclass
class MergeRecord:
    canonical: int
    alias: int


@dataclass
class IntegrationReport:
    types_resolved: int = 0
    merges: list[MergeRecord] = field(default_factory=list)
    mutex_new: int = 0
    subconcepts: list[ClusterProposal] = field(default_factory=list)
    inverses_created: int = 0
    skipped: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "types_resolved": self.types_resolved,
            "merges": [[m.canonical, m.alias] for m in self.merges],
            "mutex_new": self.mutex_new,
            "subconcepts_new": len(self.subconcepts),
            "subconcept_labels": [p.proposed_label for p in self.subconcepts],
            "inverses_created": self.inverses_created,
            "skipped": list(self.skipped),
        }


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def _parse_label_response(raw: str) -> tuple[str, str]:
    raw = raw.strip()
    try:
        start, end = raw.find("{"), raw.rfind("}")
        if start != -1 and end > start:
            obj = json.loads(raw[start : end + 1])
            if isinstance(obj, dict) and obj.get("label"):
                return str(obj["label"]).strip(), str(obj.get("description", "")).strip()
    except json.JSONDecodeError:
        pass
    return raw.splitlines()[0].strip() if raw else "", ""


def resolve_entity_types(
    kb: KnowledgeBase, cfg: IntegrationConfig, gateway: Optional[LlmGateway]
) -> int:
    """Parent untyped entity instance nodes under a class concept via the gateway."""
    if gateway is None:
        return 0
    untyped = sorted(
        (c for c in kb.concepts.values() if c.kind == "instance" and c.parent is None),
        key=lambda c: c.id,
    )
    if not untyped:
        return 0
    class_labels = sorted(
        c.label for c in kb.concepts.values() if c.kind == "class"
    )
    resolved = 0
    for node in untyped:
        req = GatewayRequest(
            model=cfg.labeling_model,
            messages=[
                (
                    "user",
                    "Assign the best concept type for the entity below. Answer with the "
                    "type name only.\nEntity: "
                    + node.label
                    + "\nKnown types: "
                    + ", ".join(class_labels),
                )
            ],
            tag="labeling",
        )
        try:
            label, _ = _parse_label_response(gateway.complete(req))
        except GatewayError as exc:
            logger.warning("type resolution skipped for %r: %s", node.label, exc)
            continue
        if not label:
            continue
        cid = kb.class_concept_id(label)
        if cid is None:
            cid = kb.add_concept(label, provenance="integrator")
        kb.reparent_concept(node.id, cid)
        resolved += 1
    return resolved


def merge_equivalents(
    kb: KnowledgeBase, cfg: IntegrationConfig, gateway: Optional[LlmGateway]
) -> list[MergeRecord]:
    """Merge triples whose arguments are exact or embedding-near duplicates."""
    by_pred: dict[str, list[int]] = {}
    for t in kb.active_triples():
        by_pred.setdefault(t.predicate, []).append(t.id)

    embeddings: dict[str, np.ndarray] = {}
    if gateway is not None:
        surfaces = sorted(
            {
                ref.surface
                for ids in by_pred.values()
                if len(ids) > 1
                for tid in ids
                for ref in (kb.triples[tid].subject, kb.triples[tid].object)
            }
        )
        if surfaces:
            try:
                vecs = gateway.embed(surfaces)
                embeddings = {s: np.asarray(v) for s, v in zip(surfaces, vecs)}
            except GatewayError as exc:
                logger.warning("merge falls back to exact matching: %s", exc)

    def args_match(a, b) -> bool:
        if a.norm == b.norm:
            return True
        va, vb = embeddings.get(a.surface), embeddings.get(b.surface)
        if va is None or vb is None:
            return False
        return _cosine(va, vb) >= cfg.merge_sim_threshold

    merges: list[MergeRecord] = []
    for pred in sorted(by_pred):
        ids = sorted(by_pred[pred])
        gone: set[int] = set()
        for i, a_id in enumerate(ids):
            if a_id in gone or a_id not in kb.triples:
                continue
            for b_id in ids[i + 1 :]:
                if b_id in gone or b_id not in kb.triples:
                    continue
                a, b = kb.triples[a_id], kb.triples[b_id]
                if args_match(a.subject, b.subject) and args_match(a.object, b.object):
                    kb.merge_triples(a_id, b_id)
                    gone.add(b_id)
                    merges.append(MergeRecord(canonical=a_id, alias=b_id))
    return merges


def induce_hierarchy(
    kb: KnowledgeBase, cfg: IntegrationConfig, gateway: Optional[LlmGateway]
) -> list[ClusterProposal]:
    """Insert labeled intermediate nodes for coherent clusters of children."""
    if gateway is None:
        return []
    applied: list[ClusterProposal] = []
    parents = [
        c.id
        for c in sorted(kb.concepts.values(), key=lambda c: c.id)
        if c.kind == "class" and len(c.children) >= 2
    ]
    for pid in parents:
        parent = kb.concepts[pid]
        children = [kb.concepts[c] for c in sorted(parent.children)]
        vecs = _child_embeddings(kb, children, gateway)
        if vecs is None:
            continue
        n = len(children)
        sims = vecs @ vecs.T
        pair_sims = [sims[i, j] for i in range(n) for j in range(i + 1, n)]
        mean_sim = float(np.mean(pair_sims))
        if not (n > cfg.child_count_threshold or mean_sim < cfg.heterogeneity_threshold):
            continue

        components = _knn_components(sims, cfg.knn_k, cfg.knn_sim_threshold)
        components = [c for c in components if len(c) >= cfg.min_cluster_size]
        components.sort(key=lambda comp: min(children[i].id for i in comp))
        for comp in components:
            members = sorted(children[i].id for i in comp)
            if len(comp) == n and parent.provenance == "integrator":
                continue  # re-wrapping all children of an induced node adds no structure
            sample = [kb.concepts[m].label for m in members[: cfg.cluster_sample_size]]
            label, description = _label_cluster(cfg, gateway, parent, sample)
            if not label:
                logger.warning("cluster under %r skipped: no usable label", parent.label)
                continue
            centroid = np.mean(
                [vecs[i] for i in comp], axis=0
            )
            centroid = centroid / np.linalg.norm(centroid)
            kb.insert_intermediate_concept(
                pid, label, description, members, embedding=centroid.tolist()
            )
            applied.append(
                ClusterProposal(
                    parent=pid,
                    member_children=members,
                    proposed_label=label,
                    proposed_description=description,
                    sample_shown_to_llm=sample,
                )
            )
    return applied


def _child_embeddings(
    kb: KnowledgeBase, children: list[Concept], gateway: LlmGateway
) -> Optional[np.ndarray]:
    missing = [c for c in children if c.embedding is None]
    if missing:
        try:
            vecs = gateway.embed([c.label for c in missing])
        except GatewayError as exc:
            logger.warning("embedding fetch failed: %s", exc)
            return None
        for c, v in zip(missing, vecs):
            kb.set_concept_embedding(c.id, v)
    mat = np.asarray([kb.concepts[c.id].embedding for c in children], dtype=float)
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    return mat / norms


def _knn_components(sims: np.ndarray, k: int, threshold: float) -> list[list[int]]:
    n = sims.shape[0]
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        order = sorted((j for j in range(n) if j != i), key=lambda j: (-sims[i, j], j))
        for j in order[:k]:
            if sims[i, j] >= threshold:
                parent[find(i)] = find(j)
    comps: dict[int, list[int]] = {}
    for i in range(n):
        comps.setdefault(find(i), []).append(i)
    return list(comps.values())


def _label_cluster(
    cfg: IntegrationConfig, gateway: LlmGateway, parent: Concept, sample: list[str]
) -> tuple[str, str]:
    req = GatewayRequest(
        model=cfg.labeling_model,
        messages=[
            (
                "user",
                "These items form a coherent group under the concept "
                f"{parent.label!r}. Propose a concise label summarizing their shared "
                'semantics and a short description. Output JSON: {"label": ..., '
                '"description": ...}\nItems: ' + ", ".join(sample),
            )
        ],
        tag="labeling",
    )
    try:
        return _parse_label_response(gateway.complete(req))
    except GatewayError as exc:
        logger.warning("cluster labeling failed: %s", exc)
        return "", ""


def detect_mutex(
    kb: KnowledgeBase, cfg: IntegrationConfig, gateway: Optional[LlmGateway]
) -> list[int]:
    """Propose mutually exclusive sibling concept groups; apply accepted ones."""
    if gateway is None:
        return []
    created: list[int] = []
    existing = {
        frozenset(cid for _, cid in ms.members) for ms in kb.mutex_sets.values()
    }
    parents = [
        c.id
        for c in sorted(kb.concepts.values(), key=lambda c: c.id)
        if c.kind == "class"
    ]
    for pid in parents:
        siblings = [
            kb.concepts[c]
            for c in sorted(kb.concepts[pid].children)
            if kb.concepts[c].kind == "class"
        ]
        if len(siblings) < 2:
            continue
        labels = [s.label for s in siblings]
        req = GatewayRequest(
            model=cfg.labeling_model,
            messages=[
                (
                    "user",
                    "Which of these sibling concept groups are mutually exclusive (an "
                    "entity cannot belong to both)? Output JSON: "
                    '[{"members": [...], "confidence": 0.0-1.0}]\nConcepts: '
                    + ", ".join(labels),
                )
            ],
            tag="mutex",
        )
        try:
            raw = gateway.complete(req)
        except GatewayError as exc:
            logger.warning("mutex detection failed under %r: %s", kb.concepts[pid].label, exc)
            continue
        try:
            start, end = raw.find("["), raw.rfind("]")
            proposals = json.loads(raw[start : end + 1]) if start != -1 else []
        except (json.JSONDecodeError, TypeError):
            logger.warning("malformed mutex proposal dropped: %r", raw[:80])
            continue
        if not isinstance(proposals, list):
            continue
        by_label = {s.label: s.id for s in siblings}
        for prop in proposals:
            if not isinstance(prop, dict):
                continue
            conf = prop.get("confidence", 0.0)
            member_ids = sorted(
                by_label[m] for m in prop.get("members", []) if m in by_label
            )
            if len(member_ids) < 2 or conf < cfg.mutex_accept_threshold:
                continue
            if frozenset(member_ids) in existing:
                continue
            try:
                mid = kb.add_mutex_set(
                    [(None, cid) for cid in member_ids],
                    provenance="integrator",
                    confidence=float(conf),
                )
            except ValidationError as exc:
                logger.warning("mutex proposal rejected: %s", exc)
                continue
            existing.add(frozenset(member_ids))
            created.append(mid)
    return created


def materialize_inverses(kb: KnowledgeBase) -> int:
    """Create (o, p_inverse, s) for every triple whose predicate declares an inverse."""
    created = 0
    for tid in sorted(kb.triples):
        t = kb.triples.get(tid)
        if t is None or t.status == "invalidated" or t.inverse_of is not None:
            continue
        schema = kb.predicates[t.predicate]
        if not schema.inverse_label or t.predicate == INSTANCE_OF:
            continue
        inv_pred = schema.inverse_label
        if inv_pred not in kb.predicates:
            kb.add_predicate(
                PredicateSchema(
                    id=inv_pred,
                    inverse_label=t.predicate,
                    allowed_subject_concepts=set(schema.allowed_object_concepts),
                    allowed_object_concepts=set(schema.allowed_subject_concepts),
                )
            )
        existing = kb._key_index.get((t.object.norm, inv_pred, t.subject.norm))
        if existing is not None:
            kb._commit("pair_inverse", {"forward": t.id, "inverse": existing})
        else:
            kb.link_inverse(t.id, inv_pred)
            created += 1
    return created


def integrate(
    kb: KnowledgeBase,
    cfg: Optional[IntegrationConfig] = None,
    gateway: Optional[LlmGateway] = None,
) -> IntegrationReport:
    """One full integration pass; never aborts mid-pass on gateway trouble."""
    cfg = cfg or IntegrationConfig()
    report = IntegrationReport()
    report.types_resolved = resolve_entity_types(kb, cfg, gateway)
    report.merges = merge_equivalents(kb, cfg, gateway)
    report.mutex_new = len(detect_mutex(kb, cfg, gateway))
    kb.recompute_confidences()
    report.subconcepts = induce_hierarchy(kb, cfg, gateway)
    report.inverses_created = materialize_inverses(kb)
    return report
