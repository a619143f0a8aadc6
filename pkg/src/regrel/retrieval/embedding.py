"""Embedding vectors, cosine similarity, and the deterministic fallback
providers (hashed tf-idf bi-encoder and a cosine-derived cross scorer).

The fallback embedder exists as a fully offline, reproducible substrate for
tests and air-gapped runs; real sentence-encoder models are reached through
the remote provider contract instead.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass

from regrel.retrieval.lexical import LexicalIndex, tokenize

log = logging.getLogger(__name__)

DEFAULT_DIM = 256


class DegenerateEmbedding(ValueError):
    """Zero-norm vector where a direction is required."""


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    dim: int
    provider_tag: str

    def __post_init__(self):
        if len(self.values) != self.dim:
            raise ValueError(f"vector length {len(self.values)} != dim {self.dim}")

    @property
    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.dim != b.dim or a.provider_tag != b.provider_tag:
        raise ValueError(
            f"incomparable embeddings: ({a.provider_tag}, dim {a.dim}) vs "
            f"({b.provider_tag}, dim {b.dim})"
        )
    na, nb = a.norm, b.norm
    if na == 0.0 or nb == 0.0:
        raise DegenerateEmbedding("degenerate embedding: zero norm")
    dot = sum(x * y for x, y in zip(a.values, b.values))
    return max(-1.0, min(1.0, dot / (na * nb)))


def _hash_slot(token: str, dim: int) -> tuple[int, float]:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    value = int.from_bytes(digest, "big")
    sign = 1.0 if value & 1 else -1.0
    return (value >> 1) % dim, sign


class HashedTfidfEmbedder:
    """Feature-hashed tf-idf embedding with signed hashing and L2 norm.

    The idf table is taken from the study set's lexical index and fixed for
    the embedder's lifetime, so vectors are linear in term counts: a text and
    its duplicated concatenation embed to the same direction.
    """

    def __init__(self, index: LexicalIndex, dim: int = DEFAULT_DIM):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.index = index
        self.dim = dim
        digest = hashlib.blake2b(digest_size=4)
        for term in sorted(index.vocabulary):
            digest.update(f"{term}:{index.vocabulary[term]};".encode("utf-8"))
        digest.update(str(index.size).encode())
        self.provider_tag = f"hashed-tfidf-d{dim}-{digest.hexdigest()}"

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ValueError("texts must be non-empty")
        return [self._embed_one(t) for t in texts]

    def _embed_one(self, text: str) -> EmbeddingVector:
        values = [0.0] * self.dim
        counts: dict[str, int] = {}
        for token in tokenize(text, self.index.stopwords):
            counts[token] = counts.get(token, 0) + 1
        for token, count in counts.items():
            slot, sign = _hash_slot(token, self.dim)
            values[slot] += sign * count * self.index.idf(token)
        norm = math.sqrt(sum(v * v for v in values))
        if norm > 0.0:
            values = [v / norm for v in values]
        else:
            log.warning("text with no indexable tokens embeds to the zero vector")
        return EmbeddingVector(tuple(values), self.dim, self.provider_tag)


class FallbackCrossScorer:
    """Cross scorer derived from the fallback embedder:
    (1 + cosine(embed(q), embed(p))) / 2, clamped to [0, 1]."""

    def __init__(self, embedder: HashedTfidfEmbedder):
        self.embedder = embedder

    def score(self, pairs: list[tuple[str, str]]) -> list[float]:
        out = []
        for query, passage in pairs:
            vq, vp = self.embedder.embed([query, passage])
            out.append(clamp_unit((1.0 + cosine_similarity(vq, vp)) / 2.0))
        return out


def clamp_unit(value: float) -> float:
    if value < 0.0 or value > 1.0:
        log.warning("cross score %s outside [0, 1]; clamped", value)
        return max(0.0, min(1.0, value))
    return value
