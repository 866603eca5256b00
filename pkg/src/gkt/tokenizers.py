"""Token counting.

Two schemes: a deterministic in-process reference scheme used by mock
backends and all tests, and an external scheme that defers to a
counting endpoint for deployments where the real tokenizer lives in
another process.

Reference scheme: split text on whitespace, then split each piece into
4-character chunks; every chunk is one token. The empty string has
zero tokens, and counts are monotone under concatenation.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Protocol

import httpx

from .errors import ExternalTokenizerUnavailable

_PIECE_RE = re.compile(r"\S+")
_CHUNK = 4


class Tokenizer(Protocol):
    scheme: str

    def count(self, text: str) -> int: ...


@dataclass(frozen=True, slots=True)
class ReferenceTokenizer:
    scheme: str = "reference"

    def count(self, text: str) -> int:
        return sum(math.ceil(len(m.group()) / _CHUNK) for m in _PIECE_RE.finditer(text))

    def encode(self, text: str) -> list[str]:
        tokens: list[str] = []
        for m in _PIECE_RE.finditer(text):
            piece = m.group()
            tokens.extend(piece[i : i + _CHUNK] for i in range(0, len(piece), _CHUNK))
        return tokens

    def decode(self, tokens: list[str]) -> str:
        # Whitespace structure is not preserved; chunks of one piece are
        # rejoined only if the caller kept them adjacent.
        return " ".join(tokens)

    def token_prefix(self, text: str, max_tokens: int) -> str:
        """Longest prefix of ``text`` holding at most ``max_tokens`` tokens.

        Cuts mid-piece at a chunk boundary when a piece straddles the
        limit, so the result is always a verbatim character prefix.
        """
        if max_tokens <= 0:
            return ""
        used = 0
        cut = 0
        for m in _PIECE_RE.finditer(text):
            chunks = math.ceil(len(m.group()) / _CHUNK)
            if used + chunks <= max_tokens:
                used += chunks
                cut = m.end()
                if used == max_tokens:
                    break
            else:
                cut = m.start() + _CHUNK * (max_tokens - used)
                break
        return text[:cut]


@dataclass(frozen=True, slots=True)
class ExternalTokenizer:
    """Counts tokens by POSTing {"text": ...} to a counting endpoint."""

    url: str
    timeout_s: float = 5.0
    scheme: str = "external"

    def count(self, text: str) -> int:
        try:
            resp = httpx.post(self.url, json={"text": text}, timeout=self.timeout_s)
            resp.raise_for_status()
            return int(resp.json()["count"])
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise ExternalTokenizerUnavailable(
                f"token counting endpoint {self.url} unreachable: {exc}"
            ) from exc
