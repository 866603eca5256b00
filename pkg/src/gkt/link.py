"""Cloud-to-edge transmission cost model.

Guidance travels as token ids: each id from a vocabulary of N entries
needs ceil(log2(N)) bits, so a budget of m tokens costs
m * ceil(log2(N)) / bandwidth seconds. The comparison partner is a
draft-and-verify scheme that ships every drafted token up and its
verification back, i.e. 2 * L tokens for an L-token response.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import DomainError


def bits_per_token(vocabulary_size: int) -> int:
    """Bits needed to index one entry of an N-entry vocabulary: ceil(log2 N)."""
    if vocabulary_size < 2:
        raise DomainError(f"vocabulary_size must be >= 2, got {vocabulary_size}")
    # (n-1).bit_length() == ceil(log2(n)) in exact integer arithmetic.
    return (vocabulary_size - 1).bit_length()


@dataclass(frozen=True, slots=True)
class LinkModel:
    bandwidth_bits_per_s: float
    vocabulary_size: int
    # Per-token protocol overhead; kept per-token (not per-message) so
    # transmission time stays additive in token count.
    overhead_bits_per_token: float = 0.0
    bits_per_token: int = field(init=False)

    def __post_init__(self) -> None:
        if self.bandwidth_bits_per_s <= 0:
            raise DomainError(
                f"bandwidth_bits_per_s must be positive, got {self.bandwidth_bits_per_s}"
            )
        if self.overhead_bits_per_token < 0:
            raise DomainError(
                f"overhead_bits_per_token must be >= 0, got {self.overhead_bits_per_token}"
            )
        object.__setattr__(self, "bits_per_token", bits_per_token(self.vocabulary_size))


def transmission_time(token_count: int, link: LinkModel) -> float:
    """Seconds to push ``token_count`` token ids through the link."""
    if token_count < 0:
        raise DomainError(f"token_count must be >= 0, got {token_count}")
    bits = token_count * (link.bits_per_token + link.overhead_bits_per_token)
    return bits / link.bandwidth_bits_per_s


def byte_transmission_time(byte_count: int, link: LinkModel) -> float:
    """Alternative pricing: raw UTF-8 bytes at 8 bits each."""
    if byte_count < 0:
        raise DomainError(f"byte_count must be >= 0, got {byte_count}")
    return byte_count * 8 / link.bandwidth_bits_per_s


class TransferScheme(enum.Enum):
    GUIDANCE = "guidance"
    DRAFT_VERIFY = "draft-verify"


@dataclass(frozen=True, slots=True)
class TransmissionReport:
    scheme: TransferScheme
    tokens_transmitted: int
    time_s: float


def compare_schemes(
    guidance_tokens: int, student_tokens: int, link: LinkModel
) -> tuple[TransmissionReport, TransmissionReport]:
    """Guidance transfer (m tokens, one way) versus draft-and-verify (2L)."""
    if guidance_tokens < 0 or student_tokens < 0:
        raise DomainError("token counts must be >= 0")
    draft_tokens = 2 * student_tokens
    return (
        TransmissionReport(
            TransferScheme.GUIDANCE, guidance_tokens, transmission_time(guidance_tokens, link)
        ),
        TransmissionReport(
            TransferScheme.DRAFT_VERIFY, draft_tokens, transmission_time(draft_tokens, link)
        ),
    )
