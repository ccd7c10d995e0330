import pytest
from fastapi.testclient import TestClient

from dysect.kb.store import KnowledgeBase
from dysect.kb.types import PredicateSchema, SourceId
from dysect.service import AuthConfig, create_app

SRC = SourceId("Extractor_mock")

TOKENS = AuthConfig(tokens={
    "tok-curator": ("alice", "curator"),
    "tok-viewer": ("bob", "viewer"),
})


def seeded_kb():
    kb = KnowledgeBase()
    kb.add_concept("Bands")
    kb.add_predicate(PredicateSchema(id="performer"))
    kb.add_predicate(PredicateSchema(id="producer"))
    for i in range(15):
        kb.upsert_triple(f"album{i}", "performer", f"band{i % 4}", SRC, 0.5 + 0.02 * i,
                         subject_type="Bands")
    return kb


@pytest.fixture
def kb():
    return seeded_kb()


@pytest.fixture
def client(kb):
    return TestClient(create_app(kb))


def auth(token):
    return {"Authorization": f"Bearer {token}"}


class TestReads:
    def test_stats(self, kb, client):
        body = client.get("/api/stats").json()
        assert body["triples_total"] == len(kb.triples)
        assert body["concepts_total"] == len(kb.concepts)
        assert sum(body["confidence_histogram"]) == len(kb.active_triples())

    def test_triples_match_direct_query(self, kb, client):
        body = client.get("/api/triples", params={"limit": 1000}).json()
        direct = kb.query_triples()
        assert [t["id"] for t in body["triples"]] == [t.id for t in direct]
        assert body["total"] == len(direct)

    def test_filters_forwarded(self, kb, client):
        body = client.get("/api/triples",
                          params={"predicate": "performer", "min_confidence": 0.7}).json()
        direct = kb.query_triples(predicate="performer", min_confidence=0.7)
        assert body["total"] == len(direct)

    def test_pagination_walk(self, kb, client):
        seen = []
        cursor = None
        while True:
            params = {"limit": 4}
            if cursor:
                params["cursor"] = cursor
            body = client.get("/api/triples", params=params).json()
            seen.extend(t["id"] for t in body["triples"])
            cursor = body["next_cursor"]
            if cursor is None:
                break
        assert seen == [t.id for t in kb.query_triples()]

    def test_malformed_cursor(self, client):
        assert client.get("/api/triples", params={"cursor": "abc"}).status_code == 400

    def test_triple_detail_and_404(self, kb, client):
        tid = next(iter(kb.triples))
        body = client.get(f"/api/triples/{tid}").json()
        assert body["subject"] == kb.triples[tid].subject.surface
        assert client.get("/api/triples/999999").status_code == 404

    def test_hierarchy_tree(self, kb, client):
        body = client.get("/api/hierarchy").json()
        labels = {r["label"] for r in body["roots"]}
        assert "Bands" in labels
        bands = next(r for r in body["roots"] if r["label"] == "Bands")
        assert len(bands["children"]) == 15

    def test_concept_detail(self, kb, client):
        cid = kb.class_concept_id("Bands")
        body = client.get(f"/api/concepts/{cid}").json()
        assert body["label"] == "Bands"
        assert body["instance_count"] == 15
        assert client.get("/api/concepts/999999").status_code == 404

    def test_iterations_endpoint(self, kb, client):
        body = client.get("/api/iterations").json()
        assert body["iterations"] == []

    def test_mutex_endpoint(self, kb, client):
        a = kb.add_concept("Rock")
        b = kb.add_concept("Jazz")
        kb.add_mutex_set([(None, a), (None, b)])
        body = client.get("/api/mutex").json()
        labels = [m["concept_label"] for m in body["mutex_sets"][0]["members"]]
        assert labels == ["Rock", "Jazz"]

    def test_reads_do_not_mutate(self, kb, client):
        before = kb.snapshot_hash()
        for path in ("/api/stats", "/api/triples", "/api/hierarchy",
                     "/api/iterations", "/api/mutex",
                     "/api/export?format=snapshot", "/api/export?format=csv-triples"):
            assert client.get(path).status_code == 200
        assert kb.snapshot_hash() == before


class TestWrites:
    def test_insert_is_trusted_upsert(self, kb, client):
        resp = client.post("/api/triples", json={
            "subject": "Back in Black", "predicate": "performer", "object": "AC / DC",
        })
        assert resp.status_code == 201
        body = resp.json()
        assert body["confidence"] == 1.0
        assert kb.triples[body["id"]].spo() == ("Back in Black", "performer", "AC / DC")

    def test_insert_unknown_predicate_is_400(self, client):
        resp = client.post("/api/triples", json={
            "subject": "a", "predicate": "nope", "object": "b",
        })
        assert resp.status_code == 400

    def test_validate_forces_confidence_one(self, kb, client):
        tid = next(iter(kb.triples))
        body = client.post(f"/api/triples/{tid}/validate").json()
        assert body["status"] == "validated"
        assert body["confidence"] == 1.0
        assert kb.triples[tid].status == "validated"

    def test_invalidate_then_excluded(self, kb, client):
        tid = next(iter(kb.triples))
        assert client.post(f"/api/triples/{tid}/invalidate").status_code == 200
        listed = client.get("/api/triples", params={"limit": 1000}).json()
        assert tid not in [t["id"] for t in listed["triples"]]

    def test_transition_404(self, client):
        assert client.post("/api/triples/999999/validate").status_code == 404

    def test_api_state_equals_direct_calls(self):
        kb_api = seeded_kb()
        kb_direct = seeded_kb()
        client = TestClient(create_app(kb_api))
        client.post("/api/triples", json={
            "subject": "Back in Black", "predicate": "performer", "object": "AC / DC",
        })
        client.post("/api/triples/1/validate")
        client.post("/api/triples/2/invalidate")

        human = SourceId("human_curator", trusted=True)
        kb_direct.upsert_triple("Back in Black", "performer", "AC / DC", human, 1.0)
        kb_direct.set_status(1, "validated", human)
        kb_direct.set_status(2, "invalidated", human)
        assert kb_api.snapshot_hash() == kb_direct.snapshot_hash()


class TestAuth:
    @pytest.fixture
    def secured(self, kb):
        return TestClient(create_app(kb, TOKENS))

    def test_missing_token_is_401(self, secured):
        assert secured.get("/api/stats").status_code == 401

    def test_unknown_token_is_401(self, secured):
        assert secured.get("/api/stats", headers=auth("nope")).status_code == 401

    def test_viewer_can_read(self, secured):
        assert secured.get("/api/triples", headers=auth("tok-viewer")).status_code == 200

    def test_viewer_cannot_write(self, secured):
        resp = secured.post("/api/triples/1/validate", headers=auth("tok-viewer"))
        assert resp.status_code == 403
        resp = secured.post("/api/triples", headers=auth("tok-viewer"), json={
            "subject": "a", "predicate": "performer", "object": "b",
        })
        assert resp.status_code == 403

    def test_curator_actor_recorded(self, kb, secured):
        body = secured.post("/api/triples", headers=auth("tok-curator"), json={
            "subject": "a", "predicate": "performer", "object": "b",
        }).json()
        assert body["evidence"][0]["source"] == "alice"
        assert kb.sources["alice"].trusted


class TestExport:
    def test_snapshot_roundtrip(self, kb, client, tmp_path):
        text = client.get("/api/export", params={"format": "snapshot"}).text
        path = tmp_path / "kb.jsonl"
        path.write_text(text, encoding="utf-8")
        restored = KnowledgeBase.restore(path)
        assert restored.snapshot_hash() == kb.snapshot_hash()

    def test_csv_has_all_triples(self, kb, client):
        lines = client.get("/api/export", params={"format": "csv-triples"}).text.strip().splitlines()
        assert lines[0].startswith("subject,predicate,object")
        assert len(lines) == 1 + len(kb.triples)

    def test_unknown_format(self, client):
        assert client.get("/api/export", params={"format": "xml"}).status_code == 400
