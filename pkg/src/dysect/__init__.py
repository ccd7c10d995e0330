"""DySECT: a self-evolving extraction and curation toolkit.

Extraction populates a probabilistic knowledge base; the KB consolidates
evidence, grows a concept hierarchy, and feeds distilled knowledge back
into the extractor's prompts.
"""

from dysect.kb.store import KnowledgeBase

__all__ = ["KnowledgeBase"]
__version__ = "0.1.0"
