"""Uniform gateway to chat and embedding providers.

Includes a scripted mock (first-matching-rule dispatch, deterministic
hash-seeded embeddings) so the entire extraction loop runs offline, plus
record/replay capture of real sessions as line-delimited JSON.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from dysect.kb.types import ValidationError

logger = logging.getLogger(__name__)

TAGS = ("extraction", "labeling", "concept_acq", "relation_acq", "mutex", "kb2text")

EMBED_DIM = 32


class GatewayError(RuntimeError):
    def __init__(self, message: str, tag: str = "", request_hash: str = ""):
        super().__init__(message)
        self.tag = tag
        self.request_hash = request_hash


@dataclass
class GatewayRequest:
    model: str
    messages: list[tuple[str, str]]  # (role, text), role in {system, user}
    temperature: float = 0.0
    max_tokens: int = 2048
    tag: str = "extraction"

    def __post_init__(self):
        if not self.messages:
            raise ValidationError("GatewayRequest needs at least one message")
        if self.tag not in TAGS:
            raise ValidationError(f"unknown request tag: {self.tag}")

    def content_hash(self) -> str:
        blob = json.dumps(
            [self.model, self.messages, self.temperature, self.tag], ensure_ascii=False
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def hash_embedding(text: str, dim: int = EMBED_DIM) -> list[float]:
    """Deterministic unit vector derived from a seeded hash of the text."""
    seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(dim)
    vec /= np.linalg.norm(vec)
    return vec.tolist()


class LlmGateway:
    """Provider interface. Subclasses implement _complete and _embed."""

    max_attempts = 3
    backoff_base = 0.5

    def complete(self, req: GatewayRequest) -> str:
        last_exc: Optional[Exception] = None
        for attempt in range(self.max_attempts):
            try:
                started = time.monotonic()
                text = self._complete(req)
                logger.debug(
                    "gateway %s tag=%s hash=%s latency=%.3fs",
                    req.model,
                    req.tag,
                    req.content_hash(),
                    time.monotonic() - started,
                )
                return text
            except GatewayError:
                raise
            except Exception as exc:  # transient provider failure
                last_exc = exc
                if attempt + 1 < self.max_attempts:
                    time.sleep(self.backoff_base * 2**attempt)
        raise GatewayError(
            f"gateway failed after {self.max_attempts} attempts: {last_exc}",
            tag=req.tag,
            request_hash=req.content_hash(),
        )

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        if not texts:
            raise ValidationError("embed requires a non-empty text list")
        return self._embed(list(texts))

    def _complete(self, req: GatewayRequest) -> str:
        raise NotImplementedError

    def _embed(self, texts: list[str]) -> list[list[float]]:
        raise NotImplementedError


@dataclass
class MockRule:
    response: str
    tag: Optional[str] = None
    contains: list[str] = field(default_factory=list)
    absent: list[str] = field(default_factory=list)

    def matches(self, req: GatewayRequest) -> bool:
        if self.tag is not None and req.tag != self.tag:
            return False
        body = "\n".join(text for _, text in req.messages)
        if any(s not in body for s in self.contains):
            return False
        if any(s in body for s in self.absent):
            return False
        return True


class MockGateway(LlmGateway):
    """Deterministic scripted gateway: first matching rule wins.

    `embedding_overrides` pins specific texts to fixed vectors so tests
    can construct exact similarity structure; everything else gets a
    hash-seeded unit vector.
    """

    def __init__(
        self,
        rules: Optional[list[MockRule]] = None,
        default_response: str = "[]",
        embedding_overrides: Optional[dict[str, list[float]]] = None,
        fail_tags: Optional[set[str]] = None,
    ):
        self.rules = rules or []
        self.default_response = default_response
        self.embedding_overrides = embedding_overrides or {}
        self.fail_tags = fail_tags or set()
        self.call_log: list[dict] = []
        self._lock = threading.Lock()

    def _complete(self, req: GatewayRequest) -> str:
        if req.tag in self.fail_tags:
            raise GatewayError("scripted failure", tag=req.tag, request_hash=req.content_hash())
        response = self.default_response
        for rule in self.rules:
            if rule.matches(req):
                response = rule.response
                break
        with self._lock:
            self.call_log.append(
                {"tag": req.tag, "hash": req.content_hash(), "response": response}
            )
        return response

    def _embed(self, texts: list[str]) -> list[list[float]]:
        out = []
        for text in texts:
            if text in self.embedding_overrides:
                vec = np.asarray(self.embedding_overrides[text], dtype=float)
                vec = vec / np.linalg.norm(vec)
                out.append(vec.tolist())
            else:
                out.append(hash_embedding(text))
        return out


class RecordingGateway(LlmGateway):
    """Wraps another gateway and captures (hash, tag, response) lines."""

    def __init__(self, inner: LlmGateway, capture_path: Union[str, Path]):
        self.inner = inner
        self.capture_path = Path(capture_path)

    def _complete(self, req: GatewayRequest) -> str:
        response = self.inner.complete(req)
        with self.capture_path.open("a", encoding="utf-8") as fh:
            fh.write(
                json.dumps(
                    {"hash": req.content_hash(), "tag": req.tag, "response": response},
                    ensure_ascii=False,
                )
                + "\n"
            )
        return response

    def _embed(self, texts: list[str]) -> list[list[float]]:
        return self.inner.embed(texts)


class ReplayGateway(LlmGateway):
    """Serves completions from a previously recorded capture file."""

    def __init__(self, capture_path: Union[str, Path]):
        self.responses: dict[str, str] = {}
        with Path(capture_path).open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    self.responses[rec["hash"]] = rec["response"]

    def _complete(self, req: GatewayRequest) -> str:
        h = req.content_hash()
        if h not in self.responses:
            raise GatewayError(f"no recorded response for request {h}", req.tag, h)
        return self.responses[h]

    def _embed(self, texts: list[str]) -> list[list[float]]:
        return [hash_embedding(t) for t in texts]


class HttpGateway(LlmGateway):
    """OpenAI-style chat/embeddings provider over HTTP."""

    def __init__(
        self,
        base_url: str,
        api_key_env: str = "DYSECT_LLM_API_KEY",
        embedding_model: str = "text-embedding-3-small",
        max_concurrency: int = 4,
    ):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.embedding_model = embedding_model
        self._semaphore = threading.Semaphore(max_concurrency)
        headers = {}
        key = os.environ.get(api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(base_url=self.base_url, headers=headers, timeout=120)

    def _complete(self, req: GatewayRequest) -> str:
        with self._semaphore:
            resp = self._client.post(
                "/chat/completions",
                json={
                    "model": req.model,
                    "messages": [{"role": r, "content": t} for r, t in req.messages],
                    "temperature": req.temperature,
                    "max_tokens": req.max_tokens,
                },
            )
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]

    def _embed(self, texts: list[str]) -> list[list[float]]:
        with self._semaphore:
            resp = self._client.post(
                "/embeddings", json={"model": self.embedding_model, "input": texts}
            )
            resp.raise_for_status()
            data = resp.json()["data"]
            out = []
            for item in sorted(data, key=lambda d: d["index"]):
                vec = np.asarray(item["embedding"], dtype=float)
                out.append((vec / np.linalg.norm(vec)).tolist())
            return out


FunctionHandler = Callable[[GatewayRequest], str]


class FunctionGateway(LlmGateway):
    """Gateway backed by a plain callable; handy for loop-closure tests."""

    def __init__(self, handler: FunctionHandler):
        self.handler = handler
        self.call_log: list[dict] = []

    def _complete(self, req: GatewayRequest) -> str:
        response = self.handler(req)
        self.call_log.append({"tag": req.tag, "hash": req.content_hash(), "response": response})
        return response

    def _embed(self, texts: list[str]) -> list[list[float]]:
        return [hash_embedding(t) for t in texts]
