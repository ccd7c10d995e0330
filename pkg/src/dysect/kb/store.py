"""Event-sourced knowledge base: triples, concepts, predicates, mutex sets.

Every mutation is expressed as an event; public mutators validate, then
commit the event through a single `_apply` dispatcher. Replaying the
event stream from an empty store reproduces the exact same state, which
is also what the append-only on-disk log contains.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path
from typing import Iterable, Optional, Union

from dysect.confidence import ConfidenceConfig, aggregate, final_confidence
from dysect.kb.types import (
    INSTANCE_OF,
    UNKNOWN_TYPE,
    VALID_STATUSES,
    AuthorizationError,
    Concept,
    EntityRef,
    Evidence,
    IterationRecord,
    MutexSet,
    PredicateSchema,
    SchemaError,
    SnapshotFormatError,
    SourceId,
    Triple,
    ValidationError,
    normalize,
)

SNAPSHOT_FORMAT = "dysect-kb"
INVERSE_SOURCE = "integrator_inverse"
SNAPSHOT_VERSION = 1

EntityLike = Union[str, EntityRef]


class KnowledgeBase:
    def __init__(
        self,
        config: Optional[ConfidenceConfig] = None,
        event_log_path: Optional[Union[str, Path]] = None,
    ):
        self.config = config or ConfidenceConfig()
        self.event_log_path = Path(event_log_path) if event_log_path else None

        self.triples: dict[int, Triple] = {}
        self.concepts: dict[int, Concept] = {}
        self.predicates: dict[str, PredicateSchema] = {}
        self.mutex_sets: dict[int, MutexSet] = {}
        self.sources: dict[str, SourceId] = {}
        self.iteration_records: list[IterationRecord] = []
        self.aliases: dict[int, int] = {}  # merged-away triple id -> canonical id
        self.events: list[dict] = []

        self._key_index: dict[tuple[str, str, str], int] = {}
        self._sp_index: dict[tuple[str, str], set[int]] = {}
        self._class_by_label: dict[str, int] = {}
        self._entity_nodes: dict[str, int] = {}

        self._next_triple_id = 1
        self._next_concept_id = 1
        self._next_mutex_id = 1

        # instance_of is always available: acquisition and typing rely on it
        if INSTANCE_OF not in self.predicates:
            self.add_predicate(PredicateSchema(id=INSTANCE_OF))

    # ------------------------------------------------------------------ events

    def _commit(self, op: str, payload: dict):
        event = {"op": op, **payload}
        result = self._apply(event)
        self.events.append(event)
        if self.event_log_path is not None:
            with self.event_log_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps({**event, "ts": time.time()}, ensure_ascii=False) + "\n")
        return result

    def _apply(self, event: dict):
        op = event["op"]
        handler = getattr(self, f"_apply_{op}", None)
        if handler is None:
            raise SnapshotFormatError(f"unknown event op: {op}")
        return handler(event)

    @classmethod
    def replay(cls, events: Iterable[dict], config: Optional[ConfidenceConfig] = None) -> "KnowledgeBase":
        """Rebuild a KB by applying an event stream to an empty store."""
        kb = cls(config=config)
        for event in events:
            event = {k: v for k, v in event.items() if k != "ts"}
            kb._apply(event)
            kb.events.append(event)
        return kb

    @classmethod
    def replay_log(cls, path: Union[str, Path], config: Optional[ConfidenceConfig] = None) -> "KnowledgeBase":
        events = []
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
        return cls.replay(events, config=config)

    # ------------------------------------------------------------------ schema

    def add_predicate(self, schema: PredicateSchema) -> str:
        if schema.id in self.predicates:
            return schema.id
        return self._commit("add_predicate", {"schema": schema.to_dict()})

    def _apply_add_predicate(self, event):
        schema = PredicateSchema.from_dict(event["schema"])
        self.predicates[schema.id] = schema
        return schema.id

    def ensure_source(self, name: str, trusted: bool = False) -> SourceId:
        existing = self.sources.get(name)
        if existing is not None:
            if trusted and not existing.trusted:
                self._commit("add_source", {"name": name, "trusted": True})
            return self.sources[name]
        self._commit("add_source", {"name": name, "trusted": trusted})
        return self.sources[name]

    def _apply_add_source(self, event):
        self.sources[event["name"]] = SourceId(event["name"], event["trusted"])
        if event["trusted"]:
            self.config.trusted_sources.add(event["name"])
        return event["name"]

    # ---------------------------------------------------------------- concepts

    def add_concept(
        self,
        label: str,
        description: str = "",
        parent: Optional[int] = None,
        provenance: str = "extractor",
        kind: str = "class",
        embedding: Optional[list[float]] = None,
    ) -> int:
        if parent is not None and parent not in self.concepts:
            raise ValidationError(f"unknown parent concept {parent}")
        return self._commit(
            "add_concept",
            {
                "label": label,
                "description": description,
                "parent": parent,
                "provenance": provenance,
                "kind": kind,
                "embedding": embedding,
            },
        )

    def _apply_add_concept(self, event):
        cid = self._next_concept_id
        self._next_concept_id += 1
        concept = Concept(
            id=cid,
            label=event["label"],
            description=event.get("description", ""),
            parent=event.get("parent"),
            provenance=event.get("provenance", "extractor"),
            kind=event.get("kind", "class"),
            embedding=event.get("embedding"),
        )
        self.concepts[cid] = concept
        if concept.parent is not None:
            self.concepts[concept.parent].children.add(cid)
        if concept.kind == "class":
            self._class_by_label.setdefault(normalize(concept.label), cid)
        else:
            self._entity_nodes.setdefault(normalize(concept.label), cid)
        return cid

    def set_concept_embedding(self, concept_id: int, embedding: list[float]) -> None:
        if concept_id not in self.concepts:
            raise ValidationError(f"unknown concept {concept_id}")
        self._commit("set_embedding", {"concept_id": concept_id, "embedding": list(embedding)})

    def _apply_set_embedding(self, event):
        self.concepts[event["concept_id"]].embedding = event["embedding"]

    def reparent_concept(self, concept_id: int, new_parent: Optional[int]) -> None:
        if concept_id not in self.concepts:
            raise ValidationError(f"unknown concept {concept_id}")
        if new_parent is not None:
            if new_parent not in self.concepts:
                raise ValidationError(f"unknown parent concept {new_parent}")
            if concept_id in self.ancestors(new_parent, inclusive=True):
                raise ValidationError("reparent would create a cycle")
        self._commit("reparent", {"concept_id": concept_id, "parent": new_parent})

    def _apply_reparent(self, event):
        concept = self.concepts[event["concept_id"]]
        if concept.parent is not None:
            self.concepts[concept.parent].children.discard(concept.id)
        concept.parent = event["parent"]
        if concept.parent is not None:
            self.concepts[concept.parent].children.add(concept.id)
        self._recompute_all()

    def insert_intermediate_concept(
        self,
        parent: int,
        label: str,
        description: str,
        members: list[int],
        embedding: Optional[list[float]] = None,
    ) -> int:
        if parent not in self.concepts:
            raise ValidationError(f"unknown parent concept {parent}")
        for m in members:
            if self.concepts.get(m) is None or self.concepts[m].parent != parent:
                raise ValidationError(f"member {m} is not a child of {parent}")
        # duplicate label under the same parent gets a numeric suffix
        sibling_labels = {self.concepts[c].label for c in self.concepts[parent].children}
        final_label = label
        n = 2
        while final_label in sibling_labels:
            final_label = f"{label} ({n})"
            n += 1
        return self._commit(
            "insert_intermediate",
            {
                "parent": parent,
                "label": final_label,
                "description": description,
                "members": sorted(members),
                "embedding": embedding,
            },
        )

    def _apply_insert_intermediate(self, event):
        cid = self._apply_add_concept(
            {
                "label": event["label"],
                "description": event.get("description", ""),
                "parent": event["parent"],
                "provenance": "integrator",
                "kind": "class",
                "embedding": event.get("embedding"),
            }
        )
        for m in event["members"]:
            member = self.concepts[m]
            self.concepts[event["parent"]].children.discard(m)
            member.parent = cid
            self.concepts[cid].children.add(m)
        self._recompute_all()
        return cid

    def ancestors(self, concept_id: int, inclusive: bool = False) -> set[int]:
        out: set[int] = set()
        cur = concept_id if inclusive else self.concepts[concept_id].parent
        while cur is not None and cur not in out:
            out.add(cur)
            cur = self.concepts[cur].parent
        return out

    def class_concept_id(self, label: str) -> Optional[int]:
        return self._class_by_label.get(normalize(label))

    def entity_node_id(self, surface: str) -> Optional[int]:
        return self._entity_nodes.get(normalize(surface))

    def instance_children(self, concept_id: int) -> list[Concept]:
        return [
            self.concepts[c]
            for c in sorted(self.concepts[concept_id].children)
            if self.concepts[c].kind == "instance"
        ]

    def instance_descendants(self, concept_id: int) -> list[Concept]:
        out = []
        stack = sorted(self.concepts[concept_id].children)
        while stack:
            c = self.concepts[stack.pop(0)]
            if c.kind == "instance":
                out.append(c)
            else:
                stack.extend(sorted(c.children))
        return out

    def roots(self) -> list[Concept]:
        return sorted(
            (c for c in self.concepts.values() if c.parent is None), key=lambda c: c.id
        )

    # ------------------------------------------------------------------ mutex

    def add_mutex_set(
        self,
        members: list[tuple[Optional[str], int]],
        provenance: str = "schema",
        confidence: float = 1.0,
    ) -> int:
        if len(members) < 2:
            raise ValidationError("MutexSet needs at least 2 members")
        for _, cid in members:
            if cid not in self.concepts:
                raise ValidationError(f"unknown concept {cid} in mutex set")
        concept_ids = [cid for _, cid in members]
        for cid in concept_ids:
            anc = self.ancestors(cid)
            if anc & set(concept_ids):
                raise ValidationError("mutex set may not contain a concept and its ancestor")
        return self._commit(
            "add_mutex",
            {
                "members": [[p, c] for p, c in members],
                "provenance": provenance,
                "confidence": confidence,
            },
        )

    def _apply_add_mutex(self, event):
        mid = self._next_mutex_id
        self._next_mutex_id += 1
        self.mutex_sets[mid] = MutexSet(
            id=mid,
            members=[(m[0], m[1]) for m in event["members"]],
            provenance=event.get("provenance", "schema"),
            confidence=event.get("confidence", 1.0),
        )
        self._recompute_all()
        return mid

    def count_mutex_violations(self, triple: Triple) -> int:
        """Distinct competitors (s, p, o'), o' != o, conflicting under some mutex set."""
        if not self.mutex_sets:
            return 0
        own = self._mutex_matchable(triple)
        if not own:
            return 0
        count = 0
        for tid in self._sp_index.get((triple.subject.norm, triple.predicate), ()):
            other = self.triples[tid]
            if other.id == triple.id or other.status == "invalidated":
                continue
            if other.object.norm == triple.object.norm:
                continue
            theirs = self._mutex_matchable(other)
            if any(
                (mid, i) in own and (mid, j) in theirs
                for mid, i, j in self._mutex_member_pairs()
            ):
                count += 1
        return count

    def _mutex_member_pairs(self):
        for mid, ms in self.mutex_sets.items():
            n = len(ms.members)
            for i in range(n):
                for j in range(n):
                    if i != j:
                        yield mid, i, j

    def _mutex_matchable(self, triple: Triple) -> set[tuple[int, int]]:
        """(mutex id, member index) patterns this triple's object matches."""
        node = self._entity_nodes.get(triple.object.norm)
        if node is None:
            node = triple.object.concept_id
        if node is None or node not in self.concepts:
            return set()
        lineage = self.ancestors(node, inclusive=True)
        out = set()
        for mid, ms in self.mutex_sets.items():
            for idx, (pred, cid) in enumerate(ms.members):
                if (pred is None or pred == triple.predicate) and cid in lineage:
                    out.add((mid, idx))
        return out

    # ----------------------------------------------------------------- triples

    def upsert_triple(
        self,
        subject: EntityLike,
        predicate: str,
        object: EntityLike,
        source: SourceId,
        local_confidence: float,
        subject_type: Optional[str] = None,
        object_type: Optional[str] = None,
        iteration: int = 0,
    ) -> int:
        if predicate not in self.predicates:
            raise SchemaError(f"unknown predicate: {predicate}")
        if not 0.0 <= local_confidence <= 1.0:
            raise ValidationError(f"local_confidence out of range: {local_confidence}")
        s = subject if isinstance(subject, EntityRef) else EntityRef(subject)
        o = object if isinstance(object, EntityRef) else EntityRef(object)
        if subject_type == UNKNOWN_TYPE:
            subject_type = None
        if object_type == UNKNOWN_TYPE:
            object_type = None
        return self._commit(
            "upsert",
            {
                "subject": s.surface,
                "predicate": predicate,
                "object": o.surface,
                "source": source.name,
                "trusted": source.trusted,
                "local_confidence": local_confidence,
                "subject_type": subject_type,
                "object_type": object_type,
                "iteration": iteration,
            },
        )

    def _ensure_class(self, label: str) -> int:
        cid = self._class_by_label.get(normalize(label))
        if cid is None:
            cid = self._apply_add_concept(
                {"label": label, "parent": None, "provenance": "extractor", "kind": "class"}
            )
        return cid

    def _ensure_instance(self, surface: str, type_label: Optional[str]) -> int:
        norm = normalize(surface)
        node = self._entity_nodes.get(norm)
        if node is None:
            parent = self._ensure_class(type_label) if type_label else None
            node = self._apply_add_concept(
                {
                    "label": surface,
                    "parent": parent,
                    "provenance": "extractor",
                    "kind": "instance",
                }
            )
        elif type_label and self.concepts[node].parent is None:
            parent = self._ensure_class(type_label)
            self.concepts[parent].children.add(node)
            self.concepts[node].parent = parent
        return node

    def _apply_upsert(self, event):
        pred = event["predicate"]
        source_name = event["source"]
        if source_name not in self.sources or (
            event.get("trusted") and not self.sources[source_name].trusted
        ):
            self._apply_add_source({"name": source_name, "trusted": event.get("trusted", False)})

        s = EntityRef(event["subject"])
        o = EntityRef(event["object"])
        s.concept_id = self._ensure_instance(s.surface, event.get("subject_type"))
        if pred == INSTANCE_OF:
            # object names a concept, not an entity
            o.concept_id = self._ensure_class(o.surface)
            node = self.concepts[s.concept_id]
            if node.parent is None:
                self.concepts[o.concept_id].children.add(node.id)
                node.parent = o.concept_id
        else:
            o.concept_id = self._ensure_instance(o.surface, event.get("object_type"))

        it = event.get("iteration", 0)
        key = (s.norm, pred, o.norm)
        tid = self._key_index.get(key)
        if tid is None:
            tid = self._next_triple_id
            self._next_triple_id += 1
            triple = Triple(
                id=tid,
                subject=s,
                predicate=pred,
                object=o,
                evidence=[
                    Evidence(
                        source=source_name,
                        local_confidence=event["local_confidence"],
                        frequency=1,
                        first_seen=it,
                        last_seen=it,
                    )
                ],
            )
            self.triples[tid] = triple
            self._key_index[key] = tid
            self._sp_index.setdefault((s.norm, pred), set()).add(tid)
        else:
            triple = self.triples[tid]
            for ev in triple.evidence:
                if ev.key == (source_name, event["local_confidence"]):
                    ev.frequency += 1
                    ev.last_seen = it
                    break
            else:
                triple.evidence.append(
                    Evidence(
                        source=source_name,
                        local_confidence=event["local_confidence"],
                        frequency=1,
                        first_seen=it,
                        last_seen=it,
                    )
                )
        self._recompute_group(s.norm, pred)
        return tid

    def set_status(self, triple_id: int, status: str, actor: SourceId) -> Triple:
        if status not in VALID_STATUSES:
            raise ValidationError(f"unknown status: {status}")
        triple_id = self.aliases.get(triple_id, triple_id)
        if triple_id not in self.triples:
            raise ValidationError(f"unknown triple {triple_id}")
        if status in ("validated", "invalidated") and not actor.trusted:
            raise AuthorizationError(
                f"actor {actor.name!r} is not trusted to {status[:-1]}e triples"
            )
        self._commit(
            "set_status", {"triple_id": triple_id, "status": status, "actor": actor.name}
        )
        return self.triples[triple_id]

    def _apply_set_status(self, event):
        triple = self.triples[event["triple_id"]]
        triple.status = event["status"]
        if event["status"] == "invalidated" and triple.inverse_of is not None:
            twin = self.triples.get(triple.inverse_of)
            if twin is not None and twin.status != "invalidated":
                twin.status = "invalidated"
                self._recompute_group(twin.subject.norm, twin.predicate)
        self._recompute_group(triple.subject.norm, triple.predicate)

    def merge_triples(self, canonical_id: int, alias_id: int) -> None:
        if canonical_id not in self.triples or alias_id not in self.triples:
            raise ValidationError("both triples must exist")
        if canonical_id == alias_id:
            raise ValidationError("cannot merge a triple with itself")
        self._commit("merge", {"canonical": canonical_id, "alias": alias_id})

    def _apply_merge(self, event):
        canonical = self.triples[event["canonical"]]
        alias = self.triples.pop(event["alias"])
        for ev in alias.evidence:
            for own in canonical.evidence:
                if own.key == ev.key:
                    own.frequency += ev.frequency
                    own.first_seen = min(own.first_seen, ev.first_seen)
                    own.last_seen = max(own.last_seen, ev.last_seen)
                    break
            else:
                canonical.evidence.append(ev)
        del self._key_index[alias.key]
        group = self._sp_index.get((alias.subject.norm, alias.predicate))
        if group:
            group.discard(alias.id)
            if not group:
                del self._sp_index[(alias.subject.norm, alias.predicate)]
        self.aliases[alias.id] = canonical.id
        if alias.inverse_of is not None:
            twin = self.triples.get(alias.inverse_of)
            if twin is not None and canonical.inverse_of is None:
                canonical.inverse_of = twin.id
                twin.inverse_of = canonical.id
        if alias.status == "validated" and canonical.status == "candidate":
            canonical.status = "validated"
        self._recompute_group(canonical.subject.norm, canonical.predicate)

    def link_inverse(self, forward_id: int, inverse_predicate: str) -> int:
        """Create the mirrored (o, p_inverse, s) triple for a forward triple."""
        forward = self.triples[forward_id]
        if inverse_predicate not in self.predicates:
            raise SchemaError(f"unknown predicate: {inverse_predicate}")
        return self._commit(
            "link_inverse",
            {
                "forward": forward_id,
                "predicate": inverse_predicate,
                "local_confidence": round(forward.confidence, 12),
            },
        )

    def _apply_pair_inverse(self, event):
        forward = self.triples[event["forward"]]
        inverse = self.triples[event["inverse"]]
        forward.inverse_of = inverse.id
        inverse.inverse_of = forward.id

    def _apply_link_inverse(self, event):
        forward = self.triples[event["forward"]]
        tid = self._apply_upsert(
            {
                "subject": forward.object.surface,
                "predicate": event["predicate"],
                "object": forward.subject.surface,
                "source": INVERSE_SOURCE,
                "trusted": False,
                "local_confidence": event["local_confidence"],
                "subject_type": None,
                "object_type": None,
                "iteration": 0,
            }
        )
        self.triples[tid].inverse_of = forward.id
        forward.inverse_of = tid
        self.triples[tid].confidence = forward.confidence
        return tid

    # -------------------------------------------------------------- confidence

    def _is_derived_inverse(self, triple: Triple) -> bool:
        # materialized mirror with no independent evidence of its own
        return bool(triple.evidence) and all(
            e.source == INVERSE_SOURCE for e in triple.evidence
        )

    def _sync_inverse(self, triple: Triple) -> None:
        if triple.inverse_of is None:
            return
        twin = self.triples.get(triple.inverse_of)
        if twin is None:
            return
        if self._is_derived_inverse(twin) and not self._is_derived_inverse(triple):
            twin.confidence = triple.confidence
        elif self._is_derived_inverse(triple) and not self._is_derived_inverse(twin):
            triple.confidence = twin.confidence

    def _recompute_group(self, subject_norm: str, predicate: str) -> None:
        group = sorted(self._sp_index.get((subject_norm, predicate), ()))
        for tid in group:
            triple = self.triples[tid]
            triple.confidence = final_confidence(
                triple, self.count_mutex_violations(triple), self.config
            )
        for tid in group:
            self._sync_inverse(self.triples[tid])

    def _recompute_all(self) -> None:
        for triple in self.triples.values():
            triple.confidence = final_confidence(
                triple, self.count_mutex_violations(triple), self.config
            )
        for triple in self.triples.values():
            self._sync_inverse(triple)

    def recompute_confidences(self) -> None:
        """Public full recompute; used by the integrator's consolidation pass."""
        self._recompute_all()

    def aggregate_confidence(self, triple: Triple) -> float:
        return aggregate(triple.evidence, self.config)

    # -------------------------------------------------------------- iteration

    def record_iteration(self, record: IterationRecord) -> None:
        self._commit("record_iteration", {"record": record.to_dict()})

    def _apply_record_iteration(self, event):
        self.iteration_records.append(IterationRecord.from_dict(event["record"]))

    # ----------------------------------------------------------------- queries

    def query_triples(
        self,
        predicate: Optional[str] = None,
        concept: Optional[int] = None,
        min_confidence: Optional[float] = None,
        status: Optional[str] = None,
        source: Optional[str] = None,
        include_invalidated: bool = False,
        include_inverses: bool = True,
    ) -> list[Triple]:
        out = []
        for triple in self.triples.values():
            if triple.status == "invalidated" and not (
                include_invalidated or status == "invalidated"
            ):
                continue
            if status is not None and triple.status != status:
                continue
            if predicate is not None and triple.predicate != predicate:
                continue
            if min_confidence is not None and triple.confidence < min_confidence:
                continue
            if source is not None and not any(e.source == source for e in triple.evidence):
                continue
            if not include_inverses and triple.inverse_of is not None:
                fwd = self.triples.get(triple.inverse_of)
                if fwd is not None and fwd.id < triple.id:
                    continue
            if concept is not None and not self._touches_concept(triple, concept):
                continue
            out.append(triple)
        out.sort(key=lambda t: (-t.confidence, t.id))
        return out

    def _touches_concept(self, triple: Triple, concept: int) -> bool:
        for ref in (triple.subject, triple.object):
            node = self._entity_nodes.get(ref.norm, ref.concept_id)
            if node is not None and node in self.concepts:
                if concept in self.ancestors(node, inclusive=True):
                    return True
        return False

    def get_triple(self, triple_id: int) -> Optional[Triple]:
        return self.triples.get(self.aliases.get(triple_id, triple_id))

    def active_triples(self) -> list[Triple]:
        return [t for t in self.triples.values() if t.status != "invalidated"]

    def confidence_histogram(self, bins: int = 10) -> list[int]:
        hist = [0] * bins
        for t in self.active_triples():
            idx = min(int(t.confidence * bins), bins - 1)
            hist[idx] += 1
        return hist

    def per_source_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for t in self.active_triples():
            for ev in t.evidence:
                counts[ev.source] = counts.get(ev.source, 0) + 1
        return counts

    # --------------------------------------------------------------- snapshots

    def state_dict(self) -> dict:
        return {
            "config": {"lam": self.config.lam, "trusted": sorted(self.config.trusted_sources)},
            "triples": {str(i): t.to_dict() for i, t in sorted(self.triples.items())},
            "concepts": {str(i): c.to_dict() for i, c in sorted(self.concepts.items())},
            "predicates": {p: s.to_dict() for p, s in sorted(self.predicates.items())},
            "mutex_sets": {str(i): m.to_dict() for i, m in sorted(self.mutex_sets.items())},
            "sources": {n: s.to_dict() for n, s in sorted(self.sources.items())},
            "iterations": [r.to_dict() for r in self.iteration_records],
            "aliases": {str(a): c for a, c in sorted(self.aliases.items())},
            "counters": {
                "triple": self._next_triple_id,
                "concept": self._next_concept_id,
                "mutex": self._next_mutex_id,
            },
        }

    def snapshot_hash(self) -> str:
        blob = json.dumps(self.state_dict(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def snapshot(self, path: Union[str, Path]) -> dict:
        path = Path(path)
        state = self.state_dict()
        with path.open("w", encoding="utf-8") as fh:
            header = {
                "rec": "header",
                "format": SNAPSHOT_FORMAT,
                "version": SNAPSHOT_VERSION,
                "config": state["config"],
                "counters": state["counters"],
            }
            fh.write(json.dumps(header, ensure_ascii=False) + "\n")
            for name, kind in (
                ("sources", "source"),
                ("predicates", "predicate"),
                ("concepts", "concept"),
                ("triples", "triple"),
                ("mutex_sets", "mutex"),
            ):
                for rec in state[name].values():
                    fh.write(json.dumps({"rec": kind, **rec}, ensure_ascii=False) + "\n")
            for rec in state["iterations"]:
                fh.write(json.dumps({"rec": "iteration", **rec}, ensure_ascii=False) + "\n")
            fh.write(
                json.dumps({"rec": "aliases", "map": state["aliases"]}, ensure_ascii=False)
                + "\n"
            )
        return {"path": str(path), "hash": self.snapshot_hash(), "triples": len(self.triples)}

    @classmethod
    def restore(cls, path: Union[str, Path]) -> "KnowledgeBase":
        path = Path(path)
        try:
            lines = [json.loads(l) for l in path.read_text(encoding="utf-8").splitlines() if l]
        except (json.JSONDecodeError, OSError) as exc:
            raise SnapshotFormatError(f"unreadable snapshot {path}: {exc}") from exc
        if not lines or lines[0].get("rec") != "header":
            raise SnapshotFormatError("snapshot missing header line")
        header = lines[0]
        if header.get("format") != SNAPSHOT_FORMAT or header.get("version") != SNAPSHOT_VERSION:
            raise SnapshotFormatError(
                f"incompatible snapshot format {header.get('format')!r} "
                f"v{header.get('version')!r}"
            )
        cfg = ConfidenceConfig(
            lam=header["config"]["lam"], trusted_sources=set(header["config"]["trusted"])
        )
        kb = cls(config=cfg)
        kb.predicates.clear()
        for rec in lines[1:]:
            kind = rec.pop("rec")
            if kind == "source":
                kb.sources[rec["name"]] = SourceId(rec["name"], rec["trusted"])
            elif kind == "predicate":
                schema = PredicateSchema.from_dict(rec)
                kb.predicates[schema.id] = schema
            elif kind == "concept":
                c = Concept.from_dict(rec)
                kb.concepts[c.id] = c
                if c.kind == "class":
                    kb._class_by_label.setdefault(normalize(c.label), c.id)
                else:
                    kb._entity_nodes.setdefault(normalize(c.label), c.id)
            elif kind == "triple":
                t = Triple.from_dict(rec)
                kb.triples[t.id] = t
                kb._key_index[t.key] = t.id
                kb._sp_index.setdefault((t.subject.norm, t.predicate), set()).add(t.id)
            elif kind == "mutex":
                m = MutexSet.from_dict(rec)
                kb.mutex_sets[m.id] = m
            elif kind == "iteration":
                kb.iteration_records.append(IterationRecord.from_dict(rec))
            elif kind == "aliases":
                kb.aliases = {int(a): c for a, c in rec["map"].items()}
            else:
                raise SnapshotFormatError(f"unknown record kind {kind!r}")
        kb._next_triple_id = header["counters"]["triple"]
        kb._next_concept_id = header["counters"]["concept"]
        kb._next_mutex_id = header["counters"]["mutex"]
        return kb

    # ------------------------------------------------------------- invariants

    def check_forest(self) -> bool:
        """Depth-first walk from every root visits each concept at most once."""
        seen: set[int] = set()
        for root in self.roots():
            stack = [root.id]
            while stack:
                cid = stack.pop()
                if cid in seen:
                    return False
                seen.add(cid)
                stack.extend(self.concepts[cid].children)
        # bidirectional consistency and full coverage
        for c in self.concepts.values():
            if c.parent is not None and c.id not in self.concepts[c.parent].children:
                return False
            for ch in c.children:
                if self.concepts[ch].parent != c.id:
                    return False
        return len(seen) == len(self.concepts)
