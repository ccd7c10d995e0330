"""Extraction step: prompt build, gateway call, triple parse/validate."""

from __future__ import annotations

from dataclasses import dataclass

from dysect.extractor.parsing import (
    ExtractionResult,
    ExtractionSchema,
    parse_triples,
)
from dysect.extractor.prompts import (
    GENERAL_CONCEPTS_HEADER,
    MODES,
    PromptTemplate,
    RenderedPrompt,
    build_prompt,
)
from dysect.gateway import GatewayRequest, LlmGateway


@dataclass
class Document:
    doc_id: str
    text: str


def extract(
    doc: Document,
    prompt: RenderedPrompt,
    gateway: LlmGateway,
    model: str,
    schema: ExtractionSchema,
    iteration: int = 0,
) -> ExtractionResult:
    raw = gateway.complete(
        GatewayRequest(model=model, messages=prompt.messages(), tag="extraction")
    )
    accepted, rejected = parse_triples(raw, schema)
    return ExtractionResult(
        doc_id=doc.doc_id, raw_text=raw, triples=accepted, rejected=rejected, iteration=iteration
    )


__all__ = [
    "Document",
    "ExtractionResult",
    "ExtractionSchema",
    "GENERAL_CONCEPTS_HEADER",
    "MODES",
    "PromptTemplate",
    "RenderedPrompt",
    "build_prompt",
    "extract",
    "parse_triples",
]
