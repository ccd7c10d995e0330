"""DocRED ingestion: published JSON structure to gold triples over alias sets."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from dysect.kb.types import normalize

DATA_DIR = Path(__file__).parent / "data"


class IngestionError(ValueError):
    """Input file does not match the expected DocRED structure."""


def load_relation_labels() -> dict[str, str]:
    return json.loads((DATA_DIR / "relation_labels.json").read_text(encoding="utf-8"))


@dataclass
class GoldEntity:
    aliases: list[str]
    concept_type: str

    @property
    def normalized_aliases(self) -> set[str]:
        return {normalize(a) for a in self.aliases}


@dataclass
class GoldDocument:
    doc_id: str
    text: str
    entities: list[GoldEntity] = field(default_factory=list)
    gold_triples: list[tuple[int, str, int]] = field(default_factory=list)  # (h, rel id, t)


def ingest_docred(path: Union[str, Path]) -> list[GoldDocument]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, OSError) as exc:
        raise IngestionError(f"unreadable DocRED file {path}: {exc}") from exc
    if not isinstance(data, list):
        raise IngestionError("top level: expected a list of documents")

    labels = load_relation_labels()
    docs: list[GoldDocument] = []
    for i, raw in enumerate(data):
        doc_id = raw.get("title") or f"doc{i}"
        sents = raw.get("sents")
        if not isinstance(sents, list):
            raise IngestionError(f"{doc_id}: missing or invalid field 'sents'")
        text = " ".join(" ".join(tokens) for tokens in sents)

        vertex_set = raw.get("vertexSet")
        if not isinstance(vertex_set, list):
            raise IngestionError(f"{doc_id}: missing or invalid field 'vertexSet'")
        entities = []
        for mentions in vertex_set:
            if not mentions:
                raise IngestionError(f"{doc_id}: empty mention set in 'vertexSet'")
            seen: list[str] = []
            for m in mentions:
                name = m.get("name")
                if name and name not in seen:
                    seen.append(name)
            entities.append(GoldEntity(aliases=seen, concept_type=mentions[0].get("type", "MISC")))

        triples = []
        for lbl in raw.get("labels", []):
            h, t, r = lbl.get("h"), lbl.get("t"), lbl.get("r")
            if not (isinstance(h, int) and 0 <= h < len(entities)):
                raise IngestionError(f"{doc_id}: label head index {h!r} out of range")
            if not (isinstance(t, int) and 0 <= t < len(entities)):
                raise IngestionError(f"{doc_id}: label tail index {t!r} out of range")
            if r not in labels:
                raise IngestionError(f"{doc_id}: unknown relation id {r!r}")
            triples.append((h, r, t))
        docs.append(GoldDocument(doc_id=doc_id, text=text, entities=entities, gold_triples=triples))
    return docs
