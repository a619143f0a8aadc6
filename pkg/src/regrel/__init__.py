"""Relevance identification of regulatory text paragraphs for business processes.

Four judgment routes over the same study sets: expert labeling (review
service), two-stage lexical/semantic retrieval, zero-shot LLM judging, and
crowd-annotation aggregation, with a shared evaluation harness.
"""

__version__ = "0.1.0"

from regrel.labels import RelevanceType

__all__ = ["RelevanceType", "__version__"]
