"""Tolerant parsing of model output into typed triples.

Accepts the 5-element (subject, subject_type, relation, object,
object_type) format and the bare 3-element (subject, relation, object)
format; the latter gets a sentinel UNKNOWN type pending later typing.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from dysect.kb.types import UNKNOWN_TYPE

logger = logging.getLogger(__name__)

REASON_NOT_JSON = "not_json"
REASON_WRONG_ARITY = "wrong_arity"
REASON_TYPE_NOT_ALLOWED = "type_not_allowed"
REASON_RELATION_NOT_ALLOWED = "relation_not_allowed"
REASON_NON_STRING = "non_string"

_FENCE = re.compile(r"^```[a-zA-Z]*\n|\n?```$")

TripleTuple = tuple[str, str, str, str, str]  # s, s_type, relation, o, o_type


@dataclass
class ExtractionSchema:
    allowed_concept_types: set[str]
    allowed_relations: set[str]


@dataclass
class ExtractionResult:
    doc_id: str
    raw_text: str
    triples: list[TripleTuple] = field(default_factory=list)
    rejected: list[tuple[str, str]] = field(default_factory=list)
    iteration: int = 0

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "raw_text": self.raw_text,
            "triples": [list(t) for t in self.triples],
            "rejected": [list(r) for r in self.rejected],
            "iteration": self.iteration,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExtractionResult":
        return cls(
            doc_id=d["doc_id"],
            raw_text=d.get("raw_text", ""),
            triples=[tuple(t) for t in d.get("triples", [])],
            rejected=[tuple(r) for r in d.get("rejected", [])],
            iteration=d.get("iteration", 0),
        )


def _locate_array(raw: str):
    cleaned = _FENCE.sub("", raw.strip()).strip()
    try:
        parsed = json.loads(cleaned)
        if isinstance(parsed, list):
            return parsed
    except json.JSONDecodeError:
        pass
    start = cleaned.find("[")
    end = cleaned.rfind("]")
    if start != -1 and end > start:
        try:
            parsed = json.loads(cleaned[start : end + 1])
            if isinstance(parsed, list):
                return parsed
        except json.JSONDecodeError:
            pass
    return None


def parse_triples(
    raw: str, schema: ExtractionSchema
) -> tuple[list[TripleTuple], list[tuple[str, str]]]:
    """Total function: every input item lands in accepted or rejected."""
    items = _locate_array(raw)
    if items is None:
        return [], [(raw, REASON_NOT_JSON)]

    accepted: list[TripleTuple] = []
    rejected: list[tuple[str, str]] = []
    for item in items:
        repr_item = json.dumps(item, ensure_ascii=False) if not isinstance(item, str) else item
        if not isinstance(item, list) or len(item) not in (3, 5):
            rejected.append((repr_item, REASON_WRONG_ARITY))
            continue
        if not all(isinstance(x, str) for x in item):
            rejected.append((repr_item, REASON_NON_STRING))
            continue
        if len(item) == 3:
            subject, relation, obj = item
            s_type = o_type = UNKNOWN_TYPE
        else:
            subject, s_type, relation, obj, o_type = item
            if (
                s_type not in schema.allowed_concept_types
                or o_type not in schema.allowed_concept_types
            ):
                rejected.append((repr_item, REASON_TYPE_NOT_ALLOWED))
                continue
        if relation not in schema.allowed_relations:
            rejected.append((repr_item, REASON_RELATION_NOT_ALLOWED))
            continue
        accepted.append((subject, s_type, relation, obj, o_type))
    return accepted, rejected
