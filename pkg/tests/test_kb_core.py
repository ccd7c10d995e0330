import json
import random

import pytest

from dysect.confidence import ConfidenceConfig
from dysect.kb.store import KnowledgeBase
from dysect.kb.types import (
    AuthorizationError,
    PredicateSchema,
    SchemaError,
    SnapshotFormatError,
    SourceId,
    ValidationError,
    normalize,
)


def seed_predicates(kb, *preds):
    for p in preds:
        kb.add_predicate(PredicateSchema(id=p))


class TestNormalization:
    def test_nfc_lower_collapse(self):
        assert normalize("  AC /  DC  ") == "ac / dc"
        assert normalize("Bruce\tFairbairn") == "bruce fairbairn"

    def test_original_surface_preserved(self, kb, extractor_source):
        seed_predicates(kb, "producer")
        tid = kb.upsert_triple("MoneyTalks ", "producer", "Bruce  Fairbairn",
                               extractor_source, 0.7)
        t = kb.triples[tid]
        assert t.subject.surface == "MoneyTalks "
        assert t.subject.norm == "moneytalks"
        assert t.object.surface == "Bruce  Fairbairn"


class TestUpsert:
    def test_new_triple_into_empty_kb(self, kb, extractor_source):
        seed_predicates(kb, "producer")
        tid = kb.upsert_triple("Moneytalks", "producer", "Bruce Fairbairn",
                               extractor_source, 0.7)
        t = kb.triples[tid]
        assert t.evidence[0].frequency == 1
        assert t.status == "candidate"

    def test_repeat_is_idempotent_key(self, kb, extractor_source):
        seed_predicates(kb, "producer")
        tid1 = kb.upsert_triple("Moneytalks", "producer", "Bruce Fairbairn",
                                extractor_source, 0.7)
        tid2 = kb.upsert_triple("Moneytalks", "producer", "Bruce Fairbairn",
                                extractor_source, 0.7)
        assert tid1 == tid2
        assert len(kb.triples) == 1
        assert kb.triples[tid1].evidence[0].frequency == 2

    def test_two_sources_noisy_or(self, kb):
        seed_predicates(kb, "p")
        kb.upsert_triple("a", "p", "b", SourceId("s1"), 0.5)
        tid = kb.upsert_triple("a", "p", "b", SourceId("s2"), 0.5)
        assert kb.triples[tid].confidence == pytest.approx(0.609375, abs=1e-9)

    def test_distinct_confidence_makes_new_evidence(self, kb, extractor_source):
        seed_predicates(kb, "p")
        tid = kb.upsert_triple("a", "p", "b", extractor_source, 0.5)
        kb.upsert_triple("a", "p", "b", extractor_source, 0.7)
        assert len(kb.triples[tid].evidence) == 2

    def test_unknown_predicate(self, kb, extractor_source):
        with pytest.raises(SchemaError):
            kb.upsert_triple("a", "nope", "b", extractor_source, 0.5)

    def test_confidence_out_of_range(self, kb, extractor_source):
        seed_predicates(kb, "p")
        with pytest.raises(ValidationError):
            kb.upsert_triple("a", "p", "b", extractor_source, 1.5)

    def test_trusted_source_forces_one(self, kb, human_source):
        seed_predicates(kb, "p")
        tid = kb.upsert_triple("a", "p", "b", human_source, 0.3)
        assert kb.triples[tid].confidence == 1.0

    def test_evidence_monotone_under_upserts(self, kb, extractor_source):
        seed_predicates(kb, "p")
        history = []
        for i in range(20):
            kb.upsert_triple("a", "p", f"obj{i % 3}", extractor_source, 0.4)
            totals = {
                (t.key, e.key): e.frequency
                for t in kb.triples.values()
                for e in t.evidence
            }
            for key, freq in history[-1].items() if history else []:
                assert totals.get(key, 0) >= freq
            history.append(totals)


class TestSetStatus:
    def test_validate_forces_one(self, kb, extractor_source, human_source):
        seed_predicates(kb, "p")
        tid = kb.upsert_triple("a", "p", "b", extractor_source, 0.3)
        t = kb.set_status(tid, "validated", human_source)
        assert t.confidence == 1.0

    def test_invalidated_excluded_from_queries(self, kb, extractor_source, human_source):
        seed_predicates(kb, "p")
        tid = kb.upsert_triple("a", "p", "b", extractor_source, 0.3)
        kb.set_status(tid, "invalidated", human_source)
        assert kb.query_triples() == []
        assert len(kb.query_triples(status="invalidated")) == 1

    def test_untrusted_actor_rejected(self, kb, extractor_source):
        seed_predicates(kb, "p")
        tid = kb.upsert_triple("a", "p", "b", extractor_source, 0.3)
        with pytest.raises(AuthorizationError):
            kb.set_status(tid, "validated", SourceId("rando"))


class TestQuery:
    def test_empty_kb(self, kb):
        assert kb.query_triples(min_confidence=0.0) == []

    def test_predicate_filter(self, demo_kb, extractor_source):
        demo_kb.upsert_triple("Moneytalks", "producer", "Bruce Fairbairn",
                              extractor_source, 0.7)
        demo_kb.upsert_triple("Moneytalks", "publication date", "21 September 1990",
                              extractor_source, 0.7)
        out = demo_kb.query_triples(predicate="producer")
        assert [t.spo() for t in out] == [("Moneytalks", "producer", "Bruce Fairbairn")]

    def test_min_confidence_and_ordering(self, kb, human_source):
        # confidences 0.6, 0.84, 1.0 via (c=0.8,f=1), (c=0.8,f=2), trusted source
        seed_predicates(kb, "p")
        kb.upsert_triple("a", "p", "b", SourceId("s"), 0.8)
        kb.upsert_triple("c", "p", "d", SourceId("s"), 0.8)
        kb.upsert_triple("c", "p", "d", SourceId("s"), 0.8)
        kb.upsert_triple("e", "p", "f", human_source, 0.8)
        out = kb.query_triples(min_confidence=0.7)
        assert [t.confidence for t in out] == pytest.approx([1.0, 0.84])

    def test_deterministic_tiebreak_by_id(self, kb, extractor_source):
        seed_predicates(kb, "p")
        for i in range(5):
            kb.upsert_triple(f"s{i}", "p", f"o{i}", extractor_source, 0.5)
        ids = [t.id for t in kb.query_triples()]
        assert ids == sorted(ids)


def build_random_kb(n_triples=500, seed=7):
    rng = random.Random(seed)
    kb = KnowledgeBase(config=ConfidenceConfig(lam=0.75))
    preds = ["likes", "knows", "located_in", "part_of"]
    for p in preds:
        kb.add_predicate(PredicateSchema(id=p, inverse_label=f"{p}_inv"))
    types = ["PER", "ORG", "LOC"]
    human = SourceId("human_curator", trusted=True)
    inserted = []
    while len(kb.triples) < n_triples:
        s, o = f"ent{rng.randint(0, 200)}", f"ent{rng.randint(201, 400)}"
        p = rng.choice(preds)
        src = SourceId(rng.choice(["Extractor_a", "Extractor_b", "Acquirer_m"]))
        tid = kb.upsert_triple(
            s, p, o, src, round(rng.random(), 3),
            subject_type=rng.choice(types), object_type=rng.choice(types),
        )
        inserted.append(tid)
    for tid in rng.sample(inserted, 25):
        kb.set_status(tid, rng.choice(["validated", "invalidated"]), human)
    return kb


class TestPersistence:
    def test_snapshot_restore_identity(self, tmp_path):
        kb = build_random_kb()
        assert len(kb.triples) >= 500
        path = tmp_path / "kb.jsonl"
        manifest = kb.snapshot(path)
        assert manifest["triples"] == len(kb.triples)
        restored = KnowledgeBase.restore(path)
        assert restored.state_dict() == kb.state_dict()
        assert restored.snapshot_hash() == kb.snapshot_hash()

    def test_event_log_replay_identity(self):
        kb = build_random_kb()
        replayed = KnowledgeBase.replay(kb.events)
        assert replayed.snapshot_hash() == kb.snapshot_hash()

    def test_event_log_file_replay(self, tmp_path):
        log = tmp_path / "events.jsonl"
        kb = KnowledgeBase(event_log_path=log)
        kb.add_predicate(PredicateSchema(id="p"))
        kb.upsert_triple("a", "p", "b", SourceId("s"), 0.5)
        kb.upsert_triple("a", "p", "c", SourceId("s"), 0.9)
        replayed = KnowledgeBase.replay_log(log)
        assert replayed.snapshot_hash() == kb.snapshot_hash()

    def test_corrupt_snapshot_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text("not json\n", encoding="utf-8")
        with pytest.raises(SnapshotFormatError):
            KnowledgeBase.restore(path)

    def test_version_mismatch_rejected(self, tmp_path):
        path = tmp_path / "old.jsonl"
        path.write_text(
            json.dumps({"rec": "header", "format": "dysect-kb", "version": 99,
                        "config": {"lam": 0.75, "trusted": []},
                        "counters": {"triple": 1, "concept": 1, "mutex": 1}}) + "\n",
            encoding="utf-8",
        )
        with pytest.raises(SnapshotFormatError):
            KnowledgeBase.restore(path)


class TestInvariants:
    def test_uniqueness_of_active_keys(self):
        kb = build_random_kb(200, seed=11)
        keys = [t.key for t in kb.triples.values()]
        assert len(keys) == len(set(keys))

    def test_hierarchy_is_forest(self):
        kb = build_random_kb(200, seed=12)
        assert kb.check_forest()

    def test_concept_parent_child_consistency(self, kb):
        a = kb.add_concept("A")
        b = kb.add_concept("B", parent=a)
        assert kb.concepts[b].parent == a
        assert b in kb.concepts[a].children
        with pytest.raises(ValidationError):
            kb.reparent_concept(a, b)  # cycle

    def test_mutex_ancestor_rejected(self, kb):
        a = kb.add_concept("A")
        b = kb.add_concept("B", parent=a)
        with pytest.raises(ValidationError):
            kb.add_mutex_set([(None, a), (None, b)])
