"""Superimposed bit-signatures for word sets and the pruning upper bound.

A word hashes to a small fixed number of bit positions; a set's signature
is the bitwise OR of its words' signatures. Containment of a word's bits
in a node signature is necessary for the word to occur below that node,
so the fraction of matched query words upper-bounds the set similarity of
every object superimposed into the node (false positives can only inflate
the bound, never deflate it).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence


@dataclass(frozen=True)
class SignatureConfig:
    length_bits: int = 512
    bits_per_word: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.bits_per_word < self.length_bits:
            raise ValueError(
                f"need 1 <= bits_per_word < length_bits, got "
                f"{self.bits_per_word} / {self.length_bits}"
            )
        if self.length_bits % 64 != 0:
            raise ValueError(f"length_bits must be a multiple of 64, got {self.length_bits}")


@dataclass(frozen=True)
class Signature:
    """Fixed-length bit string stored as a big int."""

    bits: int
    length_bits: int

    def __or__(self, other: "Signature") -> "Signature":
        if self.length_bits != other.length_bits:
            raise ValueError(
                f"signature length mismatch: {self.length_bits} vs {other.length_bits}"
            )
        return Signature(self.bits | other.bits, self.length_bits)

    def contains(self, other: "Signature") -> bool:
        """True when every bit set in ``other`` is set in ``self``."""
        return (self.bits & other.bits) == other.bits

    def popcount(self) -> int:
        return self.bits.bit_count()

    @classmethod
    def zero(cls, length_bits: int) -> "Signature":
        return cls(0, length_bits)

    @classmethod
    def ones(cls, length_bits: int) -> "Signature":
        return cls((1 << length_bits) - 1, length_bits)

    def to_le_words(self) -> bytes:
        """Raw little-endian 64-bit words, as stored in the index file."""
        return self.bits.to_bytes(self.length_bits // 8, "little")

    @classmethod
    def from_le_words(cls, raw: bytes, length_bits: int) -> "Signature":
        if len(raw) * 8 != length_bits:
            raise ValueError(f"expected {length_bits // 8} bytes, got {len(raw)}")
        return cls(int.from_bytes(raw, "little"), length_bits)


@lru_cache(maxsize=1 << 16)
def sign_word(word_id: int, cfg: SignatureConfig) -> Signature:
    """Deterministic signature of one word: seeded hash picks the positions.

    The derived positions may collide, so at most ``bits_per_word`` distinct
    bits are set.
    """
    digest = hashlib.blake2b(
        word_id.to_bytes(8, "little", signed=True),
        key=cfg.seed.to_bytes(8, "little", signed=True),
        digest_size=8 * cfg.bits_per_word,
    ).digest()
    bits = 0
    for i in range(cfg.bits_per_word):
        pos = int.from_bytes(digest[8 * i : 8 * i + 8], "little") % cfg.length_bits
        bits |= 1 << pos
    return Signature(bits, cfg.length_bits)


def sign_word_set(words: Iterable[int], cfg: SignatureConfig) -> Signature:
    return superimpose([sign_word(w, cfg) for w in words], cfg.length_bits)


def superimpose(sigs: Sequence[Signature], length_bits: int | None = None) -> Signature:
    """Bitwise OR of signatures; an empty list gives the all-zero signature."""
    if not sigs:
        if length_bits is None:
            raise ValueError("superimposing an empty list requires length_bits")
        return Signature.zero(length_bits)
    out = sigs[0]
    for s in sigs[1:]:
        out = out | s
    if length_bits is not None and out.length_bits != length_bits:
        raise ValueError(
            f"signature length mismatch: {out.length_bits} vs {length_bits}"
        )
    return out


def similarity_upper_bound(
    q_words: Sequence[int], node_sig: Signature, cfg: SignatureConfig
) -> float:
    """Admissible similarity bound: matched query words over |q|.

    Dividing by |q| instead of the (unknown) union size keeps the bound
    at or above the true set similarity of every covered object.
    """
    if not q_words:
        raise ValueError("q_words must be non-empty")
    matched = sum(1 for w in q_words if node_sig.contains(sign_word(w, cfg)))
    return matched / len(q_words)
