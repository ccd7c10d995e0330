import pytest

from dysect.confidence import ConfidenceConfig
from dysect.kb.store import KnowledgeBase
from dysect.kb.types import PredicateSchema, SourceId


@pytest.fixture
def kb():
    return KnowledgeBase()


@pytest.fixture
def extractor_source():
    return SourceId("Extractor_gpt-4o")


@pytest.fixture
def human_source():
    return SourceId("human_curator", trusted=True)


@pytest.fixture
def demo_kb():
    """KB seeded with the music-demo predicates and concept types."""
    kb = KnowledgeBase(config=ConfidenceConfig())
    kb.add_concept("Time")
    kb.add_concept("Persons")
    kb.add_concept("MISC")
    for pred in ("producer", "publication date", "performer"):
        kb.add_predicate(PredicateSchema(id=pred))
    return kb


def brute_force_noisy_or(evidence, lam):
    """Independent oracle: multiply (1 - lam*c) once per unit of frequency."""
    prod = 1.0
    for ev in evidence:
        for _ in range(ev.frequency):
            prod *= 1.0 - lam * ev.local_confidence
    return 1.0 - prod
