"""Prompt assembly: template loading, slot filling, feedback-block injection."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from dysect.feedback import KbGuidance
from dysect.kb.types import ValidationError

TEMPLATE_DIR = Path(__file__).parent / "templates"

MODES = ("base", "positive", "negative")

GENERAL_CONCEPTS_HEADER = "### Previously Extracted General Concepts:"

SLOT_TOKENS = (
    "{docred_concept_type_list}",
    "{docred_relations_list}",
    "{kb-info}",
    "{document}",
    "{example}",
    "{added_info}",
)


@dataclass
class PromptTemplate:
    system_text: str
    user_text: str
    positive_text: str
    negative_text: str

    @classmethod
    def load(cls, template_dir: Union[str, Path] = TEMPLATE_DIR) -> "PromptTemplate":
        d = Path(template_dir)
        return cls(
            system_text=(d / "system.txt").read_text(encoding="utf-8"),
            user_text=(d / "user.txt").read_text(encoding="utf-8"),
            positive_text=(d / "positive.txt").read_text(encoding="utf-8"),
            negative_text=(d / "negative.txt").read_text(encoding="utf-8"),
        )


@dataclass
class RenderedPrompt:
    system: str
    user: str

    def messages(self) -> list[tuple[str, str]]:
        return [("system", self.system), ("user", self.user)]


def _serialize_examples(examples: Sequence[Sequence[str]]) -> str:
    # same JSON array shape the model must emit
    return json.dumps([list(e) for e in examples], ensure_ascii=False, indent=2)


def build_prompt(
    document: str,
    mode: str,
    concept_types: Sequence[str],
    relations: Sequence[str],
    kb_guidance: Optional[KbGuidance] = None,
    prior_triples: Optional[Sequence[Sequence[str]]] = None,
    templates: Optional[PromptTemplate] = None,
    example_cap: int = 30,
) -> RenderedPrompt:
    if mode not in MODES:
        raise ValidationError(f"unknown prompt mode: {mode}")
    templates = templates or PromptTemplate.load()
    prior_triples = list(prior_triples or [])
    guidance = kb_guidance or KbGuidance()

    if mode in ("positive", "negative") and not prior_triples and guidance.is_empty():
        raise ValidationError(f"{mode} mode requires prior triples or KB guidance")

    parts: list[str] = []
    if guidance.general_concepts:
        parts.append(GENERAL_CONCEPTS_HEADER + "\n" + ", ".join(guidance.general_concepts))

    if mode == "positive":
        examples = (prior_triples or guidance.positive_examples)[:example_cap]
        added = list(guidance.mutex_notes)
        block = templates.positive_text.replace("{example}", _serialize_examples(examples))
        block = block.replace("{added_info}", "\n".join(added))
        parts.append(block.strip())
    elif mode == "negative":
        examples = prior_triples[:example_cap]
        added = []
        if guidance.negative_examples:
            added.append(
                "Already well-covered concepts: " + ", ".join(guidance.negative_examples)
            )
        added.extend(guidance.mutex_notes)
        block = templates.negative_text.replace("{example}", _serialize_examples(examples))
        block = block.replace("{added_info}", "\n".join(added))
        parts.append(block.strip())

    user = templates.user_text
    user = user.replace("{docred_concept_type_list}", ", ".join(concept_types))
    user = user.replace("{docred_relations_list}", ", ".join(relations))
    user = user.replace("{kb-info}", "\n\n".join(parts))
    user = user.replace("{document}", document)

    for token in SLOT_TOKENS:
        if token in user or token in templates.system_text:
            raise ValidationError(f"unfilled template slot: {token}")
    return RenderedPrompt(system=templates.system_text, user=user)
