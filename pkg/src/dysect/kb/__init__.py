from dysect.kb.store import KnowledgeBase
from dysect.kb.types import (
    Concept,
    EntityRef,
    Evidence,
    IterationRecord,
    MutexSet,
    PredicateSchema,
    SourceId,
    Triple,
    normalize,
)

__all__ = [
    "Concept",
    "EntityRef",
    "Evidence",
    "IterationRecord",
    "KnowledgeBase",
    "MutexSet",
    "PredicateSchema",
    "SourceId",
    "Triple",
    "normalize",
]
