from regrel.retrieval.embedding import (
    DegenerateEmbedding,
    EmbeddingVector,
    FallbackCrossScorer,
    HashedTfidfEmbedder,
    cosine_similarity,
)
from regrel.retrieval.lexical import (
    Bm25Params,
    LexicalIndex,
    bm25_ranking,
    bm25_score,
    build_lexical_index,
    tokenize,
)
from regrel.retrieval.pipeline import (
    METHOD_A,
    METHOD_B,
    PipelineConfig,
    Ranking,
    RetrievalContext,
    binarize_top_k,
    initial_candidates,
    provider_factory,
    read_rankings,
    rerank,
    resolve_final_k,
    run_pipeline,
    write_rankings,
)

__all__ = [
    "Bm25Params",
    "DegenerateEmbedding",
    "EmbeddingVector",
    "FallbackCrossScorer",
    "HashedTfidfEmbedder",
    "LexicalIndex",
    "METHOD_A",
    "METHOD_B",
    "PipelineConfig",
    "Ranking",
    "RetrievalContext",
    "binarize_top_k",
    "bm25_ranking",
    "bm25_score",
    "build_lexical_index",
    "cosine_similarity",
    "initial_candidates",
    "provider_factory",
    "read_rankings",
    "rerank",
    "resolve_final_k",
    "run_pipeline",
    "tokenize",
    "write_rankings",
]
