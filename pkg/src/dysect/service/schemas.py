"""Pydantic request/response models for the KB service API."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

API_VERSION = 1


class EvidenceOut(BaseModel):
    source: str
    local_confidence: float
    frequency: int
    first_seen: int
    last_seen: int


class TripleOut(BaseModel):
    id: int
    subject: str
    predicate: str
    object: str
    confidence: float
    status: str
    inverse_of: Optional[int] = None
    evidence: list[EvidenceOut]


class TripleListOut(BaseModel):
    api_version: int = API_VERSION
    triples: list[TripleOut]
    next_cursor: Optional[str] = None
    total: int


class TripleIn(BaseModel):
    subject: str = Field(min_length=1)
    predicate: str = Field(min_length=1)
    object: str = Field(min_length=1)
    subject_type: Optional[str] = None
    object_type: Optional[str] = None


class StatsOut(BaseModel):
    api_version: int = API_VERSION
    triples_total: int
    triples_validated: int
    triples_invalidated: int
    concepts_total: int
    concepts_induced: int
    mutex_sets_total: int
    confidence_histogram: list[int]
    per_source_counts: dict[str, int]


class IterationOut(BaseModel):
    outer_index: int
    inner_index: int
    triples_total: int
    triples_new: int
    concepts_total: int
    subconcepts_new: int
    mutex_sets_new: int
    invalidated_total: int
    confidence_histogram: list[int]
    per_source_counts: dict[str, int]


class IterationListOut(BaseModel):
    api_version: int = API_VERSION
    iterations: list[IterationOut]


class ConceptOut(BaseModel):
    id: int
    label: str
    description: str
    parent: Optional[int]
    children: list[int]
    provenance: str
    kind: str


class ConceptDetailOut(ConceptOut):
    api_version: int = API_VERSION
    instance_count: int
    triple_count: int


class HierarchyNode(BaseModel):
    id: int
    label: str
    provenance: str
    kind: str
    children: list["HierarchyNode"] = []


class HierarchyOut(BaseModel):
    api_version: int = API_VERSION
    roots: list[HierarchyNode]


class MutexMemberOut(BaseModel):
    predicate: Optional[str]
    concept_id: int
    concept_label: str


class MutexSetOut(BaseModel):
    id: int
    members: list[MutexMemberOut]
    provenance: str
    confidence: float


class MutexListOut(BaseModel):
    api_version: int = API_VERSION
    mutex_sets: list[MutexSetOut]


class ErrorOut(BaseModel):
    detail: str


HierarchyNode.model_rebuild()
