"""Generation backends.

MockBackend is a pure function of (prompt, seed, max_new_tokens): it
emits a deterministic word stream, so any prefix of a longer request is
byte-identical to a shorter one. A scripted table can pin exact
continuations for chosen prompts, which is how tests control whether
guidance contains an answer. Latency is simulated from per-token cost
so timing sections of a report stay reproducible.

RemoteBackend speaks the plain-completions HTTP protocol
(POST {endpoint}/v1/completions) with bearer auth, bounded in-flight
concurrency, and retry with exponential backoff on transient failures.
"""
from __future__ import annotations

import hashlib
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import httpx

from .domain import BackendKind, BackendSpec, FinishReason, GenerationSettings
from .errors import ContextOverflow, RemoteRejected, RemoteUnavailable
from .tokenizers import ExternalTokenizer, ReferenceTokenizer, Tokenizer

# 64 two-letter syllables; no digits, so mock filler never trips the
# numeric answer extractor's fallback.
_WORDS = tuple(
    c + v
    for c in "bdfghjklmnprs"
    for v in "aeiou"
)[:64]

_MAX_ATTEMPTS = 3


@dataclass(frozen=True, slots=True)
class GenerationOutput:
    text: str
    token_count: int
    finish_reason: FinishReason
    latency_s: float


def build_tokenizer(spec: BackendSpec) -> Tokenizer:
    if spec.tokenizer.scheme == "external":
        assert spec.tokenizer.url is not None
        return ExternalTokenizer(url=spec.tokenizer.url, timeout_s=spec.tokenizer.timeout_s)
    return ReferenceTokenizer()


class MockBackend:
    is_simulated = True

    def __init__(self, spec: BackendSpec) -> None:
        if spec.seed is None:
            raise ValueError("mock backends require a seed")
        self.spec = spec
        self.name = spec.name
        self.kind = BackendKind.MOCK
        self.vocabulary_size = spec.vocabulary_size
        self.tokenizer = ReferenceTokenizer()
        self._scripted = dict(spec.scripted or {})

    def _check_context(self, prompt: str) -> None:
        limit = self.spec.max_context_tokens
        if limit is not None and self.tokenizer.count(prompt) > limit:
            raise ContextOverflow(
                f"prompt of {self.tokenizer.count(prompt)} tokens exceeds "
                f"{self.name} context of {limit}"
            )

    def _word(self, key: bytes, index: int) -> str:
        digest = hashlib.sha256(key + index.to_bytes(4, "big")).digest()
        return _WORDS[digest[0] % len(_WORDS)]

    def generate(self, prompt: str, settings: GenerationSettings) -> GenerationOutput:
        self._check_context(prompt)
        seed = settings.seed if settings.seed is not None else self.spec.seed
        for fragment, continuation in self._scripted.items():
            if fragment in prompt:
                text = self.tokenizer.token_prefix(continuation, settings.max_new_tokens)
                finish = FinishReason.STOP if text == continuation else FinishReason.LENGTH
                break
        else:
            key = f"{seed}|{prompt}".encode()
            words = (self._word(key, i) for i in range(settings.max_new_tokens))
            text = "".join(" " + w for w in words)
            finish = FinishReason.LENGTH
        count = self.tokenizer.count(text)
        latency = self.spec.per_call_overhead_s + self.spec.per_token_latency_s * count
        return GenerationOutput(text, count, finish, latency)

    def generate_batch(
        self, prompts: list[str], settings: GenerationSettings
    ) -> list[GenerationOutput]:
        return [self.generate(p, settings) for p in prompts]

    def batch_duration(self, outputs: list[GenerationOutput]) -> float:
        """Simulated wall time for one batched decode: members advance in
        lockstep, so the longest member sets the pace."""
        if not outputs:
            return 0.0
        longest = max(o.token_count for o in outputs)
        return self.spec.per_call_overhead_s + self.spec.per_token_latency_s * longest


class RemoteBackend:
    is_simulated = False

    def __init__(self, spec: BackendSpec) -> None:
        if not spec.endpoint or not spec.model_id:
            raise ValueError("remote backends require endpoint and model_id")
        self.spec = spec
        self.name = spec.name
        self.kind = BackendKind.REMOTE
        self.vocabulary_size = spec.vocabulary_size
        self.tokenizer = build_tokenizer(spec)
        self._semaphore = threading.Semaphore(spec.max_in_flight)
        headers = {}
        token = os.environ.get(spec.auth_token_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(
            base_url=spec.endpoint.rstrip("/"),
            headers=headers,
            timeout=spec.request_timeout_s,
        )

    def close(self) -> None:
        self._client.close()

    def _check_context(self, prompt: str) -> None:
        limit = self.spec.max_context_tokens
        if limit is None:
            return
        count = self.tokenizer.count(prompt)
        if count > limit:
            raise ContextOverflow(
                f"prompt of {count} tokens exceeds {self.name} context of {limit}"
            )

    def _post_once(self, body: dict) -> dict:
        try:
            resp = self._client.post("/v1/completions", json=body)
        except httpx.HTTPError as exc:
            raise RemoteUnavailable(f"{self.name}: {exc}") from exc
        if resp.status_code >= 500:
            raise RemoteUnavailable(f"{self.name}: server returned {resp.status_code}")
        if resp.status_code >= 400:
            raise RemoteRejected(
                f"{self.name}: request rejected with {resp.status_code}: {resp.text[:200]}"
            )
        return resp.json()

    def generate(self, prompt: str, settings: GenerationSettings) -> GenerationOutput:
        self._check_context(prompt)
        body = {
            "model": self.spec.model_id,
            "prompt": prompt,
            "max_tokens": settings.max_new_tokens,
            "temperature": settings.temperature,
            "top_p": settings.top_p,
        }
        start = time.perf_counter()
        with self._semaphore:
            for attempt in range(_MAX_ATTEMPTS):
                try:
                    payload = self._post_once(body)
                    break
                except RemoteUnavailable:
                    if attempt == _MAX_ATTEMPTS - 1:
                        raise
                    time.sleep(self.spec.retry_backoff_s * 2**attempt)
        choice = payload["choices"][0]
        text = choice.get("text", "")
        usage = payload.get("usage") or {}
        count = usage.get("completion_tokens")
        if count is None:
            count = self.tokenizer.count(text)
        finish = (
            FinishReason.LENGTH if choice.get("finish_reason") == "length" else FinishReason.STOP
        )
        return GenerationOutput(text, int(count), finish, time.perf_counter() - start)

    def generate_batch(
        self, prompts: list[str], settings: GenerationSettings
    ) -> list[GenerationOutput]:
        if not prompts:
            return []
        workers = min(self.spec.max_in_flight, len(prompts))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(self.generate, p, settings) for p in prompts]
            outputs: list[GenerationOutput] = []
            for index, future in enumerate(futures):
                try:
                    outputs.append(future.result())
                except Exception as exc:
                    if hasattr(exc, "item_index"):
                        exc.item_index = index
                    raise
        return outputs

    def batch_duration(self, outputs: list[GenerationOutput]) -> float:
        return max((o.latency_s for o in outputs), default=0.0)


Backend = MockBackend | RemoteBackend


def build_backend(spec: BackendSpec) -> Backend:
    if spec.kind is BackendKind.MOCK:
        return MockBackend(spec)
    return RemoteBackend(spec)
