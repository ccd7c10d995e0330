"""HTTP facade over the KB: inspection, analytics, and curation endpoints.

A thin veneer: every mutation endpoint calls the corresponding KB
operation directly, so API post-state equals direct-call post-state.
"""

from __future__ import annotations

import csv
import io
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import PlainTextResponse, Response

from dysect.kb.store import KnowledgeBase
from dysect.kb.types import (
    INSTANCE_OF,
    AuthorizationError,
    SchemaError,
    SourceId,
    Triple,
    ValidationError,
)
from dysect.service.schemas import (
    ConceptDetailOut,
    EvidenceOut,
    HierarchyNode,
    HierarchyOut,
    IterationListOut,
    IterationOut,
    MutexListOut,
    MutexMemberOut,
    MutexSetOut,
    StatsOut,
    TripleIn,
    TripleListOut,
    TripleOut,
)

HUMAN_SOURCE = "human_curator"


@dataclass
class Session:
    actor: SourceId
    role: str  # viewer | curator


@dataclass
class AuthConfig:
    """token -> (actor name, role). Empty config means open curator access."""

    tokens: dict[str, tuple[str, str]]

    @classmethod
    def open(cls) -> "AuthConfig":
        return cls(tokens={})


def _triple_out(t: Triple) -> TripleOut:
    return TripleOut(
        id=t.id,
        subject=t.subject.surface,
        predicate=t.predicate,
        object=t.object.surface,
        confidence=t.confidence,
        status=t.status,
        inverse_of=t.inverse_of,
        evidence=[EvidenceOut(**e.to_dict()) for e in t.evidence],
    )


def create_app(kb: KnowledgeBase, auth: Optional[AuthConfig] = None) -> FastAPI:
    auth = auth or AuthConfig.open()
    app = FastAPI(title="DySECT KB service", version="1")
    write_lock = threading.Lock()

    def session(request: Request) -> Session:
        if not auth.tokens:
            return Session(actor=SourceId(HUMAN_SOURCE, trusted=True), role="curator")
        header = request.headers.get("authorization", "")
        token = header.removeprefix("Bearer ").strip()
        entry = auth.tokens.get(token)
        if entry is None:
            raise HTTPException(status_code=401, detail="missing or unknown token")
        name, role = entry
        return Session(actor=SourceId(name, trusted=(role == "curator")), role=role)

    def require_curator(sess: Session = Depends(session)) -> Session:
        if sess.role != "curator":
            raise HTTPException(status_code=403, detail="curator role required")
        return sess

    @app.get("/api/stats", response_model=StatsOut)
    def stats(sess: Session = Depends(session)):
        return StatsOut(
            triples_total=len(kb.triples),
            triples_validated=sum(1 for t in kb.triples.values() if t.status == "validated"),
            triples_invalidated=sum(
                1 for t in kb.triples.values() if t.status == "invalidated"
            ),
            concepts_total=len(kb.concepts),
            concepts_induced=sum(
                1 for c in kb.concepts.values() if c.provenance == "integrator"
            ),
            mutex_sets_total=len(kb.mutex_sets),
            confidence_histogram=kb.confidence_histogram(),
            per_source_counts=kb.per_source_counts(),
        )

    @app.get("/api/iterations", response_model=IterationListOut)
    def iterations(sess: Session = Depends(session)):
        return IterationListOut(
            iterations=[IterationOut(**r.to_dict()) for r in kb.iteration_records]
        )

    def _tree(cid: int) -> HierarchyNode:
        c = kb.concepts[cid]
        return HierarchyNode(
            id=c.id,
            label=c.label,
            provenance=c.provenance,
            kind=c.kind,
            children=[_tree(ch) for ch in sorted(c.children)],
        )

    @app.get("/api/hierarchy", response_model=HierarchyOut)
    def hierarchy(sess: Session = Depends(session)):
        return HierarchyOut(roots=[_tree(r.id) for r in kb.roots()])

    @app.get("/api/concepts/{concept_id}", response_model=ConceptDetailOut)
    def concept_detail(concept_id: int, sess: Session = Depends(session)):
        c = kb.concepts.get(concept_id)
        if c is None:
            raise HTTPException(status_code=404, detail=f"unknown concept {concept_id}")
        fields = {k: v for k, v in c.to_dict().items() if k != "embedding"}
        return ConceptDetailOut(
            **fields,
            instance_count=len(kb.instance_descendants(concept_id)),
            triple_count=len(kb.query_triples(concept=concept_id)),
        )

    @app.get("/api/mutex", response_model=MutexListOut)
    def mutex(sess: Session = Depends(session)):
        out = []
        for mid in sorted(kb.mutex_sets):
            ms = kb.mutex_sets[mid]
            out.append(
                MutexSetOut(
                    id=ms.id,
                    members=[
                        MutexMemberOut(
                            predicate=p,
                            concept_id=cid,
                            concept_label=kb.concepts[cid].label if cid in kb.concepts else "",
                        )
                        for p, cid in ms.members
                    ],
                    provenance=ms.provenance,
                    confidence=ms.confidence,
                )
            )
        return MutexListOut(mutex_sets=out)

    @app.get("/api/triples", response_model=TripleListOut)
    def triples(
        predicate: Optional[str] = None,
        concept: Optional[int] = None,
        min_confidence: Optional[float] = None,
        status: Optional[str] = None,
        source: Optional[str] = None,
        include_invalidated: bool = False,
        cursor: Optional[str] = None,
        limit: int = Query(default=100, ge=1, le=1000),
        sess: Session = Depends(session),
    ):
        try:
            matched = kb.query_triples(
                predicate=predicate,
                concept=concept,
                min_confidence=min_confidence,
                status=status,
                source=source,
                include_invalidated=include_invalidated,
            )
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        offset = 0
        if cursor:
            try:
                offset = max(0, int(cursor))
            except ValueError:
                raise HTTPException(status_code=400, detail="malformed cursor")
        page = matched[offset : offset + limit]
        next_cursor = str(offset + limit) if offset + limit < len(matched) else None
        return TripleListOut(
            triples=[_triple_out(t) for t in page],
            next_cursor=next_cursor,
            total=len(matched),
        )

    @app.get("/api/triples/{triple_id}", response_model=TripleOut)
    def triple_detail(triple_id: int, sess: Session = Depends(session)):
        t = kb.get_triple(triple_id)
        if t is None:
            raise HTTPException(status_code=404, detail=f"unknown triple {triple_id}")
        return _triple_out(t)

    @app.post("/api/triples", response_model=TripleOut, status_code=201)
    def insert_triple(body: TripleIn, sess: Session = Depends(require_curator)):
        actor = SourceId(sess.actor.name, trusted=True)
        with write_lock:
            try:
                tid = kb.upsert_triple(
                    body.subject,
                    body.predicate,
                    body.object,
                    actor,
                    1.0,
                    subject_type=body.subject_type,
                    object_type=body.object_type,
                )
            except SchemaError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            except ValidationError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        return _triple_out(kb.triples[tid])

    def _transition(triple_id: int, status: str, sess: Session) -> TripleOut:
        with write_lock:
            if kb.get_triple(triple_id) is None:
                raise HTTPException(status_code=404, detail=f"unknown triple {triple_id}")
            try:
                t = kb.set_status(triple_id, status, sess.actor)
            except AuthorizationError as exc:
                raise HTTPException(status_code=403, detail=str(exc))
            except ValidationError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        return _triple_out(t)

    @app.post("/api/triples/{triple_id}/validate", response_model=TripleOut)
    def validate_triple(triple_id: int, sess: Session = Depends(require_curator)):
        return _transition(triple_id, "validated", sess)

    @app.post("/api/triples/{triple_id}/invalidate", response_model=TripleOut)
    def invalidate_triple(triple_id: int, sess: Session = Depends(require_curator)):
        return _transition(triple_id, "invalidated", sess)

    @app.get("/api/export")
    def export_kb(format: str = "snapshot", sess: Session = Depends(session)):
        if format == "snapshot":
            with tempfile.NamedTemporaryFile("r", suffix=".jsonl", delete=False) as fh:
                tmp = Path(fh.name)
            kb.snapshot(tmp)
            data = tmp.read_text(encoding="utf-8")
            tmp.unlink()
            return PlainTextResponse(data, media_type="application/x-ndjson")
        if format == "csv-triples":
            buf = io.StringIO()
            writer = csv.writer(buf)
            writer.writerow(["subject", "predicate", "object", "confidence", "status", "top_source"])
            for t in kb.query_triples(include_invalidated=True):
                top = max(t.evidence, key=lambda e: (e.local_confidence * e.frequency, e.source))
                writer.writerow(
                    [t.subject.surface, t.predicate, t.object.surface, t.confidence, t.status, top.source]
                )
            return Response(buf.getvalue(), media_type="text/csv")
        raise HTTPException(status_code=400, detail=f"unknown export format {format!r}")

    return app
