"""Lexical indexing and Okapi BM25 scoring over a study set.

Tokenization is Unicode-aware lowercasing with splits on non-alphanumeric
characters; no stemming or stopword removal by default (legal vocabulary is
sensitive to stemming errors). The idf is smoothed so it stays positive on
small corpora:

    idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
    score(q, d) = sum over distinct query terms t of
        idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(d) / avglen))

Repeated query terms count once (the sum runs over the query's term set).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, TYPE_CHECKING

if TYPE_CHECKING:
    from regrel.corpus import StudySet

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75


def tokenize(text: str, stopwords: frozenset[str] = frozenset()) -> list[str]:
    tokens = [t.lower() for t in _TOKEN_RE.findall(text)]
    if stopwords:
        tokens = [t for t in tokens if t not in stopwords]
    return tokens


@dataclass(frozen=True)
class Bm25Params:
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError(f"k1 must be positive, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


@dataclass
class LexicalIndex:
    vocabulary: dict[str, int]  # term -> document frequency
    postings: dict[str, dict[str, int]]  # term -> {para_id: term frequency}
    doc_lengths: dict[str, int]
    avg_doc_length: float
    params: Bm25Params
    stopwords: frozenset[str] = field(default_factory=frozenset)

    @property
    def size(self) -> int:
        return len(self.doc_lengths)

    def idf(self, term: str) -> float:
        df = self.vocabulary.get(term, 0)
        n = self.size
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))


def build_lexical_index(
    study_set: "StudySet | Iterable[tuple[str, str]]",
    params: Bm25Params | None = None,
    stopwords: Iterable[str] = (),
) -> LexicalIndex:
    """Build an inverted index over paragraph bodies.

    Accepts a StudySet or any iterable of (para_id, text) pairs.
    """
    params = params or Bm25Params()
    stop = frozenset(stopwords)
    if hasattr(study_set, "paragraphs"):
        items = [(p.para_id, p.body) for p in study_set.paragraphs]
    else:
        items = list(study_set)
    if not items:
        raise ValueError("cannot index an empty study set")

    postings: dict[str, dict[str, int]] = {}
    doc_lengths: dict[str, int] = {}
    for para_id, text in items:
        tokens = tokenize(text, stop)
        doc_lengths[para_id] = len(tokens)
        for token in tokens:
            postings.setdefault(token, {})
            postings[token][para_id] = postings[token].get(para_id, 0) + 1

    vocabulary = {term: len(docs) for term, docs in postings.items()}
    avg = sum(doc_lengths.values()) / len(doc_lengths)
    return LexicalIndex(
        vocabulary=vocabulary,
        postings=postings,
        doc_lengths=doc_lengths,
        avg_doc_length=avg,
        params=params,
        stopwords=stop,
    )


def bm25_score(index: LexicalIndex, query: str, para_id: str) -> float:
    """Okapi BM25 score of one document for a query; terms absent from the
    document contribute 0, so the score is always >= 0."""
    if para_id not in index.doc_lengths:
        raise KeyError(f"unknown para_id: {para_id}")
    k1, b = index.params.k1, index.params.b
    length_norm = 1.0 - b + b * index.doc_lengths[para_id] / index.avg_doc_length
    score = 0.0
    for term in set(tokenize(query, index.stopwords)):
        tf = index.postings.get(term, {}).get(para_id, 0)
        if tf == 0:
            continue
        score += index.idf(term) * tf * (k1 + 1.0) / (tf + k1 * length_norm)
    return score


def bm25_ranking(index: LexicalIndex, query: str) -> list[tuple[str, float]]:
    """All documents scored for a query, sorted score-descending with ties
    broken by ascending para_id."""
    scored = [(pid, bm25_score(index, query, pid)) for pid in index.doc_lengths]
    scored.sort(key=lambda e: (-e[1], e[0]))
    return scored
