"""Uniform provider contract for text generation and embedding.

Ships two deterministic offline providers (a fixture-driven scripted
generator and a signed-hash bag-of-words embedder) plus a thin HTTPS client
for live deployments. Everything downstream talks to the two small
interfaces defined here, so swapping providers is a config change.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol

import numpy as np

logger = logging.getLogger(__name__)

EMBEDDING_DIM = 256
FALLBACK_TEXT = "UNKNOWN"
FALLBACK_LOGPROB = -2.0


class TransportError(RuntimeError):
    """Retryable transport-level failure (timeouts, connection resets, 5xx)."""


class ProviderRefusal(RuntimeError):
    """Non-retryable refusal from the provider, surfaced to the caller."""


@dataclass
class GenerationRequest:
    prompt: str
    temperature: float = 0.0
    max_output_tokens: int = 1024
    want_logprobs: bool = False
    seed: Optional[int] = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")


@dataclass
class GenerationResult:
    text: str
    mean_token_logprob: Optional[float] = None
    token_count: int = 0

    def __post_init__(self):
        if self.mean_token_logprob is not None and self.mean_token_logprob > 0:
            raise ValueError("mean token log-probability must be <= 0")


class GenerationProvider(Protocol):
    def generate(self, request: GenerationRequest) -> GenerationResult: ...


class EmbeddingProvider(Protocol):
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


def with_retries(fn, attempts: int = 3, base_delay: float = 0.25):
    """Run fn, retrying TransportError with exponential backoff."""
    for attempt in range(attempts):
        try:
            return fn()
        except TransportError:
            if attempt == attempts - 1:
                raise
            delay = base_delay * (2 ** attempt)
            logger.warning("transport failure, retrying in %.2fs", delay)
            time.sleep(delay)


class ScriptedProvider:
    """Deterministic generator driven by a fixture map.

    ``responses`` maps a prompt key to either one entry or a list of entries,
    where an entry is ``{"text": ..., "logprob": ...}`` (or a (text, logprob)
    pair). Lookup order: exact prompt match, then the longest key contained
    in the prompt. Lists are indexed by ``seed % len``, so the provider is a
    pure function of (prompt, seed). Unknown prompts get a fixed fallback.
    """

    def __init__(self, responses: Optional[dict] = None,
                 fallback=(FALLBACK_TEXT, FALLBACK_LOGPROB)):
        self.responses = dict(responses or {})
        self.fallback = fallback
        self.calls: list[str] = []

    @classmethod
    def from_file(cls, path) -> "ScriptedProvider":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def add(self, key: str, text: str, logprob: float = -0.1) -> None:
        self.responses[key] = {"text": text, "logprob": logprob}

    def _lookup(self, prompt: str):
        if prompt in self.responses:
            return self.responses[prompt]
        matches = [k for k in self.responses if k in prompt]
        if matches:
            matches.sort(key=lambda k: (-len(k), k))
            return self.responses[matches[0]]
        return None

    @staticmethod
    def _entry_parts(entry):
        if isinstance(entry, dict):
            return entry["text"], entry.get("logprob", FALLBACK_LOGPROB)
        text, logprob = entry
        return text, logprob

    def generate(self, request: GenerationRequest) -> GenerationResult:
        self.calls.append(request.prompt)
        entry = self._lookup(request.prompt)
        if entry is None:
            text, logprob = self.fallback
        else:
            if isinstance(entry, list):
                entry = entry[(request.seed or 0) % len(entry)]
            text, logprob = self._entry_parts(entry)
        return GenerationResult(
            text=text,
            mean_token_logprob=logprob if request.want_logprobs else None,
            token_count=len(text.split()),
        )


_TOKEN_RE = re.compile(r"[a-z0-9]+")


class HashingEmbedder:
    """Signed-hash bag-of-words embedder; deterministic, no model download.

    Tokens are case-folded alphanumeric runs, hashed (md5) into a fixed
    number of buckets with a +/-1 sign, then L2-normalized.
    """

    def __init__(self, dimension: int = EMBEDDING_DIM):
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise ValueError("cannot embed empty text")
        vec = np.zeros(self.dimension, dtype=np.float32)
        for token in _TOKEN_RE.findall(text.casefold()):
            digest = hashlib.md5(token.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:4], "little") % self.dimension
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # pathological cancellation; fall back to a whole-text hash
            digest = hashlib.md5(text.encode("utf-8")).digest()
            vec[int.from_bytes(digest[:4], "little") % self.dimension] = 1.0
            norm = 1.0
        return vec / norm


class LiveProvider:
    """OpenAI-style HTTPS provider for chat completion and embeddings.

    Credentials come from an environment variable; an optional semaphore
    caps concurrent outbound requests.
    """

    def __init__(self, base_url: str, chat_model: str, embed_model: str,
                 api_key_env: str = "FMSELECT_API_KEY",
                 dimension: int = 1536, max_concurrency: Optional[int] = None,
                 timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.chat_model = chat_model
        self.embed_model = embed_model
        self.api_key_env = api_key_env
        self.dimension = dimension
        self.timeout = timeout
        self._sem = threading.Semaphore(max_concurrency) if max_concurrency else None

    def _headers(self) -> dict:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise ProviderRefusal(f"missing credentials: set {self.api_key_env}")
        return {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    def _post(self, route: str, payload: dict) -> dict:
        import requests

        def attempt():
            try:
                resp = requests.post(self.base_url + route, json=payload,
                                     headers=self._headers(), timeout=self.timeout)
            except requests.RequestException as exc:
                raise TransportError(str(exc)) from exc
            if resp.status_code >= 500:
                raise TransportError(f"server error {resp.status_code}")
            if resp.status_code >= 400:
                raise ProviderRefusal(f"{resp.status_code}: {resp.text[:200]}")
            return resp.json()

        if self._sem:
            with self._sem:
                return with_retries(attempt)
        return with_retries(attempt)

    def generate(self, request: GenerationRequest) -> GenerationResult:
        payload = {
            "model": self.chat_model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        if request.want_logprobs:
            payload["logprobs"] = True
        if request.seed is not None:
            payload["seed"] = request.seed
        data = self._post("/chat/completions", payload)
        choice = data["choices"][0]
        text = choice["message"]["content"]
        mean_logprob = None
        logprobs = (choice.get("logprobs") or {}).get("content") or []
        if request.want_logprobs and logprobs:
            values = [t["logprob"] for t in logprobs]
            mean_logprob = min(sum(values) / len(values), 0.0)
        return GenerationResult(text=text, mean_token_logprob=mean_logprob,
                                token_count=len(logprobs) or len(text.split()))

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise ValueError("cannot embed empty text")
        data = self._post("/embeddings", {"model": self.embed_model, "input": text})
        vec = np.asarray(data["data"][0]["embedding"], dtype=np.float32)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ProviderRefusal("embedding endpoint returned a zero vector")
        return vec / norm
