"""Two-stage retrieval pipelines over a study set.

Method A: lexical BM25 candidate generation, cross-encoder re-ranking.
Method B: bi-encoder cosine candidate generation, cross-encoder re-ranking.

Both stages sort score-descending with ties broken by ascending para_id, so
identical inputs produce byte-identical rankings with the fallback
providers. Re-ranking permutes the candidate set but never adds or removes
entries.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

from regrel.corpus import StudySet
from regrel.process import ProcessModel, node_query_text
from regrel.retrieval.embedding import (
    DEFAULT_DIM,
    EmbeddingVector,
    FallbackCrossScorer,
    HashedTfidfEmbedder,
    cosine_similarity,
)
from regrel.retrieval.lexical import Bm25Params, LexicalIndex, bm25_score, build_lexical_index

log = logging.getLogger(__name__)

METHOD_A = "A_bm25_ce"
METHOD_B = "B_bienc_ce"
METHODS = {"A": METHOD_A, "B": METHOD_B, METHOD_A: METHOD_A, METHOD_B: METHOD_B}

DEFAULT_INITIAL_K = 100
GOLD_COUNT = "gold_count"


class Embedder(Protocol):
    provider_tag: str

    def embed(self, texts: list[str]) -> list[EmbeddingVector]: ...


class CrossScorer(Protocol):
    def score(self, pairs: list[tuple[str, str]]) -> list[float]: ...


@dataclass(frozen=True)
class PipelineConfig:
    method: str = "B"
    initial_k: int = DEFAULT_INITIAL_K
    final_k: int | str = GOLD_COUNT
    query_verbosity: str = "description_only"

    def __post_init__(self):
        if METHODS.get(self.method) is None:
            raise ValueError(f"unknown method: {self.method!r}")
        if self.initial_k <= 0:
            raise ValueError("initial_k must be positive")
        if isinstance(self.final_k, int):
            if self.final_k < 0:
                raise ValueError("final_k must be >= 0")
            if self.final_k > self.initial_k:
                raise ValueError("final_k must be <= initial_k")
        elif self.final_k != GOLD_COUNT:
            raise ValueError(f"final_k must be an int or {GOLD_COUNT!r}")

    @property
    def method_name(self) -> str:
        return METHODS[self.method]


@dataclass
class Ranking:
    query_node_id: str
    entries: list[tuple[str, float]]  # (para_id, score), sorted
    method: str
    stage: str  # "initial" | "reranked"

    def __post_init__(self):
        ids = [pid for pid, _ in self.entries]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate para_id in ranking")
        if self.entries != sort_entries(self.entries):
            raise ValueError("ranking entries are not in canonical order")

    @property
    def para_ids(self) -> list[str]:
        return [pid for pid, _ in self.entries]

    def to_json(self) -> dict:
        return {
            "query_node_id": self.query_node_id,
            "method": self.method,
            "stage": self.stage,
            "entries": [{"para_id": pid, "score": score} for pid, score in self.entries],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Ranking":
        return cls(
            query_node_id=obj["query_node_id"],
            entries=[(e["para_id"], float(e["score"])) for e in obj["entries"]],
            method=obj["method"],
            stage=obj["stage"],
        )


def sort_entries(entries: Iterable[tuple[str, float]]) -> list[tuple[str, float]]:
    return sorted(entries, key=lambda e: (-e[1], e[0]))


# --- provider factories -------------------------------------------------------


class FallbackProviderFactory:
    """Deterministic offline providers derived from the study-set index."""

    def __init__(self, dim: int = DEFAULT_DIM):
        self.dim = dim

    def make_embedder(self, index: LexicalIndex) -> Embedder:
        return HashedTfidfEmbedder(index, dim=self.dim)

    def make_cross(self, embedder: Embedder) -> CrossScorer:
        return FallbackCrossScorer(embedder)


class RemoteProviderFactory:
    def __init__(self, embedder: Embedder, cross: CrossScorer):
        self._embedder = embedder
        self._cross = cross

    def make_embedder(self, index: LexicalIndex) -> Embedder:
        return self._embedder

    def make_cross(self, embedder: Embedder) -> CrossScorer:
        return self._cross


def provider_factory(spec: str = "fallback", dim: int = DEFAULT_DIM):
    if spec == "fallback":
        return FallbackProviderFactory(dim=dim)
    if spec == "remote":
        from regrel.providers import ProviderConfig, RemoteCrossScorer, RemoteEmbedder

        config = ProviderConfig.from_env()
        return RemoteProviderFactory(RemoteEmbedder(config), RemoteCrossScorer(config))
    raise ValueError(f"unknown provider spec: {spec!r}")


# --- retrieval context and pipelines -----------------------------------------


class RetrievalContext:
    """Immutable per-set state: the lexical index, the paragraph embeddings,
    and the providers. Build once, query from many threads."""

    def __init__(self, study_set: StudySet, index: LexicalIndex,
                 embedder: Embedder, cross: CrossScorer):
        self.study_set = study_set
        self.index = index
        self.embedder = embedder
        self.cross = cross
        self.bodies = {p.para_id: p.body for p in study_set.paragraphs}
        vectors = embedder.embed([p.body for p in study_set.paragraphs])
        self.vectors = {p.para_id: v for p, v in zip(study_set.paragraphs, vectors)}

    @classmethod
    def build(
        cls,
        study_set: StudySet,
        params: Bm25Params | None = None,
        providers: "str | FallbackProviderFactory | RemoteProviderFactory" = "fallback",
    ) -> "RetrievalContext":
        factory = provider_factory(providers) if isinstance(providers, str) else providers
        index = build_lexical_index(study_set, params)
        embedder = factory.make_embedder(index)
        cross = factory.make_cross(embedder)
        return cls(study_set, index, embedder, cross)


def initial_candidates(ctx: RetrievalContext, query: str, method: str, k: int) -> Ranking:
    """Stage-1 candidates: top-k by BM25 (method A) or bi-encoder cosine (B)."""
    method = METHODS[method]
    size = ctx.index.size
    if k > size:
        log.warning("initial_k %d exceeds set size %d; clamped", k, size)
        k = size
    if method == METHOD_A:
        scored = [(pid, bm25_score(ctx.index, query, pid)) for pid in ctx.bodies]
    else:
        qvec = ctx.embedder.embed([query])[0]
        scored = [(pid, cosine_similarity(qvec, vec)) for pid, vec in ctx.vectors.items()]
    entries = sort_entries(scored)[:k]
    return Ranking(query_node_id="", entries=entries, method=method, stage="initial")


def rerank(ctx: RetrievalContext, query: str, candidates: Ranking) -> Ranking:
    pairs = [(query, ctx.bodies[pid]) for pid in candidates.para_ids]
    scores = ctx.cross.score(pairs)
    entries = sort_entries(zip(candidates.para_ids, scores))
    return Ranking(
        query_node_id=candidates.query_node_id,
        entries=entries,
        method=candidates.method,
        stage="reranked",
    )


def run_pipeline(
    study_set: StudySet,
    model: ProcessModel,
    node_id: str,
    config: PipelineConfig,
    providers: "str | FallbackProviderFactory | RemoteProviderFactory | RetrievalContext" = "fallback",
) -> Ranking:
    """Run one two-stage pipeline for a query node and return the re-ranked
    ranking. Pass a prebuilt RetrievalContext to amortize index and embedding
    construction across nodes."""
    if isinstance(providers, RetrievalContext):
        ctx = providers
    else:
        ctx = RetrievalContext.build(study_set, providers=providers)
    query = node_query_text(model, node_id, config.query_verbosity)
    candidates = initial_candidates(ctx, query, config.method, config.initial_k)
    candidates.query_node_id = node_id
    return rerank(ctx, query, candidates)


def binarize_top_k(ranking: Ranking, k: int) -> list[str]:
    """The k highest-ranked para_ids (ties already canonicalized). Returns
    exactly min(k, len(entries)) ids; k=0 gives an empty list."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > len(ranking.entries):
        log.warning("k %d exceeds ranking size %d; clamped", k, len(ranking.entries))
        k = len(ranking.entries)
    return ranking.para_ids[:k]


def resolve_final_k(config: PipelineConfig, gold, node_id: str, level: int) -> int:
    """Resolve the equal-count cut: with final_k = "gold_count" the cut equals
    the number of gold-relevant paragraphs for this node (level 1: paragraphs
    relevant for the process; levels 2/3: paragraphs relevant for the node)."""
    if isinstance(config.final_k, int):
        return config.final_k
    count = 0
    for labels in gold.labels.values():
        if level == 1:
            count += labels.level1.relevant
        else:
            count += labels.relevant_at(level, node_id)
    return count


def write_rankings(path: str | Path, rankings: Iterable[Ranking]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for ranking in rankings:
            fh.write(json.dumps(ranking.to_json(), ensure_ascii=False) + "\n")


def read_rankings(path: str | Path) -> list[Ranking]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(Ranking.from_json(json.loads(line)))
    return out
