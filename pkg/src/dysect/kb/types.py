"""Domain types for the knowledge base: entities, evidence, triples, concepts."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from typing import Optional

_WS = re.compile(r"\s+")

# Sentinel concept-type tag for triples parsed from 3-element arrays,
# where the extractor supplied no entity types.
UNKNOWN_TYPE = "UNKNOWN"

# Built-in predicate linking an entity instance to its concept.
INSTANCE_OF = "instance_of"

VALID_STATUSES = ("candidate", "validated", "invalidated")


def normalize(surface: str) -> str:
    """Canonical entity key: NFC, lowercase, collapsed whitespace."""
    return _WS.sub(" ", unicodedata.normalize("NFC", surface).strip().lower())


class SchemaError(ValueError):
    """Unknown predicate or ill-formed schema element."""


class ValidationError(ValueError):
    """Input outside its declared range or shape."""


class AuthorizationError(PermissionError):
    """Untrusted actor attempting a trusted-only transition."""


class SnapshotFormatError(ValueError):
    """Corrupt or version-incompatible snapshot/event-log file."""


@dataclass
class SourceId:
    name: str
    trusted: bool = False

    def to_dict(self) -> dict:
        return {"name": self.name, "trusted": self.trusted}


@dataclass
class Evidence:
    """One (source, local-confidence, frequency) record supporting a triple.

    Repeated observations with the same (source, local_confidence) key
    increment `frequency` rather than appending a new record.
    """

    source: str
    local_confidence: float
    frequency: int = 1
    first_seen: int = 0
    last_seen: int = 0

    def __post_init__(self):
        if not 0.0 <= self.local_confidence <= 1.0:
            raise ValidationError(
                f"local_confidence must be in [0,1], got {self.local_confidence}"
            )
        if self.frequency < 1:
            raise ValidationError(f"frequency must be >= 1, got {self.frequency}")

    @property
    def key(self) -> tuple[str, float]:
        return (self.source, self.local_confidence)

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "local_confidence": self.local_confidence,
            "frequency": self.frequency,
            "first_seen": self.first_seen,
            "last_seen": self.last_seen,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Evidence":
        return cls(**d)


@dataclass
class EntityRef:
    """A mention of an entity; `norm` is the canonical identity key."""

    surface: str
    concept_id: Optional[int] = None
    norm: str = field(default="")

    def __post_init__(self):
        if not self.norm:
            self.norm = normalize(self.surface)

    def __eq__(self, other):
        if not isinstance(other, EntityRef):
            return NotImplemented
        return self.norm == other.norm and self.concept_id == other.concept_id

    def __hash__(self):
        return hash((self.norm, self.concept_id))

    def to_dict(self) -> dict:
        return {"surface": self.surface, "concept_id": self.concept_id, "norm": self.norm}

    @classmethod
    def from_dict(cls, d: dict) -> "EntityRef":
        return cls(surface=d["surface"], concept_id=d.get("concept_id"), norm=d.get("norm", ""))


@dataclass
class Triple:
    id: int
    subject: EntityRef
    predicate: str
    object: EntityRef
    evidence: list[Evidence] = field(default_factory=list)
    confidence: float = 0.0
    status: str = "candidate"
    inverse_of: Optional[int] = None

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.subject.norm, self.predicate, self.object.norm)

    def spo(self) -> tuple[str, str, str]:
        """Display form (original surfaces)."""
        return (self.subject.surface, self.predicate, self.object.surface)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "subject": self.subject.to_dict(),
            "predicate": self.predicate,
            "object": self.object.to_dict(),
            "evidence": [e.to_dict() for e in self.evidence],
            "confidence": self.confidence,
            "status": self.status,
            "inverse_of": self.inverse_of,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Triple":
        return cls(
            id=d["id"],
            subject=EntityRef.from_dict(d["subject"]),
            predicate=d["predicate"],
            object=EntityRef.from_dict(d["object"]),
            evidence=[Evidence.from_dict(e) for e in d["evidence"]],
            confidence=d["confidence"],
            status=d["status"],
            inverse_of=d.get("inverse_of"),
        )


@dataclass
class Concept:
    """A node in the concept hierarchy.

    `kind` distinguishes class-level nodes (types, induced subconcepts)
    from instance nodes materialized per distinct entity surface.
    """

    id: int
    label: str
    description: str = ""
    parent: Optional[int] = None
    children: set[int] = field(default_factory=set)
    embedding: Optional[list[float]] = None
    provenance: str = "extractor"  # extractor | integrator | human
    kind: str = "class"  # class | instance

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "description": self.description,
            "parent": self.parent,
            "children": sorted(self.children),
            "embedding": self.embedding,
            "provenance": self.provenance,
            "kind": self.kind,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Concept":
        return cls(
            id=d["id"],
            label=d["label"],
            description=d.get("description", ""),
            parent=d.get("parent"),
            children=set(d.get("children", [])),
            embedding=d.get("embedding"),
            provenance=d.get("provenance", "extractor"),
            kind=d.get("kind", "class"),
        )


@dataclass
class PredicateSchema:
    id: str  # the label doubles as the identifier
    label: str = ""
    inverse_label: Optional[str] = None
    allowed_subject_concepts: set[str] = field(default_factory=set)
    allowed_object_concepts: set[str] = field(default_factory=set)

    def __post_init__(self):
        if not self.label:
            self.label = self.id
        if self.inverse_label is not None and self.inverse_label == self.label:
            raise SchemaError(f"inverse_label must differ from label: {self.label}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "inverse_label": self.inverse_label,
            "allowed_subject_concepts": sorted(self.allowed_subject_concepts),
            "allowed_object_concepts": sorted(self.allowed_object_concepts),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PredicateSchema":
        return cls(
            id=d["id"],
            label=d.get("label", d["id"]),
            inverse_label=d.get("inverse_label"),
            allowed_subject_concepts=set(d.get("allowed_subject_concepts", [])),
            allowed_object_concepts=set(d.get("allowed_object_concepts", [])),
        )


@dataclass
class MutexSet:
    """Concepts (optionally scoped to a predicate) declared mutually exclusive.

    Each member is a (predicate-or-None, concept_id) pattern; a None
    predicate means the exclusion applies regardless of relation.
    """

    id: int
    members: list[tuple[Optional[str], int]]
    provenance: str = "schema"  # schema | integrator | human
    confidence: float = 1.0

    def __post_init__(self):
        if len(self.members) < 2:
            raise ValidationError("MutexSet needs at least 2 members")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "members": [[p, c] for p, c in self.members],
            "provenance": self.provenance,
            "confidence": self.confidence,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MutexSet":
        return cls(
            id=d["id"],
            members=[(m[0], m[1]) for m in d["members"]],
            provenance=d.get("provenance", "schema"),
            confidence=d.get("confidence", 1.0),
        )


@dataclass
class IterationRecord:
    """Per-inner-iteration analytics snapshot."""

    outer_index: int
    inner_index: int
    triples_total: int = 0
    triples_new: int = 0
    concepts_total: int = 0
    subconcepts_new: int = 0
    mutex_sets_new: int = 0
    invalidated_total: int = 0
    confidence_histogram: list[int] = field(default_factory=lambda: [0] * 10)
    per_source_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "outer_index": self.outer_index,
            "inner_index": self.inner_index,
            "triples_total": self.triples_total,
            "triples_new": self.triples_new,
            "concepts_total": self.concepts_total,
            "subconcepts_new": self.subconcepts_new,
            "mutex_sets_new": self.mutex_sets_new,
            "invalidated_total": self.invalidated_total,
            "confidence_histogram": list(self.confidence_histogram),
            "per_source_counts": dict(sorted(self.per_source_counts.items())),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IterationRecord":
        return cls(
            outer_index=d["outer_index"],
            inner_index=d["inner_index"],
            triples_total=d.get("triples_total", 0),
            triples_new=d.get("triples_new", 0),
            concepts_total=d.get("concepts_total", 0),
            subconcepts_new=d.get("subconcepts_new", 0),
            mutex_sets_new=d.get("mutex_sets_new", 0),
            invalidated_total=d.get("invalidated_total", 0),
            confidence_histogram=list(d.get("confidence_histogram", [0] * 10)),
            per_source_counts=dict(d.get("per_source_counts", {})),
        )
