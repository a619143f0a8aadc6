"""HTTP provider clients for embedding, cross-scoring, and chat completion.

The wire contract is deliberately small so common model servers can sit
behind it:

    POST {base}/embed  {"texts": [...]}            -> {"dim": d, "vectors": [[...], ...]}
    POST {base}/cross  {"pairs": [[q, p], ...]}    -> {"scores": [...]}
    POST {base}/chat   {"messages": [...], "temperature": t} -> {"content": "..."}

Each call is retried once with exponential backoff, then fails with a typed
TransportError carrying the retry count. Base URLs and bearer tokens come
from configuration or the environment (REGREL_PROVIDER_URL,
REGREL_PROVIDER_TOKEN, REGREL_CHAT_URL, REGREL_CHAT_TOKEN).
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass

import httpx

from regrel.retrieval.embedding import EmbeddingVector, clamp_unit

log = logging.getLogger(__name__)

RETRIES = 1
BACKOFF_SECONDS = 0.5


class TransportError(RuntimeError):
    def __init__(self, message: str, retries: int):
        super().__init__(f"{message} (after {retries} retries)")
        self.retries = retries


@dataclass
class ProviderConfig:
    base_url: str
    token: str | None = None
    timeout: float = 30.0

    @classmethod
    def from_env(cls, url_var: str = "REGREL_PROVIDER_URL",
                 token_var: str = "REGREL_PROVIDER_TOKEN") -> "ProviderConfig":
        url = os.environ.get(url_var)
        if not url:
            raise TransportError(f"{url_var} is not set", retries=0)
        return cls(base_url=url.rstrip("/"), token=os.environ.get(token_var))


class HttpProvider:
    def __init__(self, config: ProviderConfig, client: httpx.Client | None = None):
        self.config = config
        headers = {}
        if config.token:
            headers["Authorization"] = f"Bearer {config.token}"
        self._client = client or httpx.Client(
            base_url=config.base_url, headers=headers, timeout=config.timeout
        )

    def _post(self, path: str, payload: dict) -> dict:
        attempts = 0
        while True:
            try:
                response = self._client.post(path, json=payload)
                response.raise_for_status()
                return response.json()
            except (httpx.HTTPError, ValueError) as exc:
                if attempts >= RETRIES:
                    raise TransportError(f"POST {path} failed: {exc}", retries=attempts) from exc
                time.sleep(BACKOFF_SECONDS * (2**attempts))
                attempts += 1


class RemoteEmbedder(HttpProvider):
    def __init__(self, config: ProviderConfig, client: httpx.Client | None = None):
        super().__init__(config, client)
        self.provider_tag = f"remote:{config.base_url}"

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ValueError("texts must be non-empty")
        body = self._post("/embed", {"texts": texts})
        dim = int(body["dim"])
        vectors = body["vectors"]
        if len(vectors) != len(texts):
            raise TransportError(
                f"/embed returned {len(vectors)} vectors for {len(texts)} texts", RETRIES
            )
        out = []
        for vec in vectors:
            if len(vec) != dim:
                raise TransportError(f"/embed vector length {len(vec)} != dim {dim}", RETRIES)
            out.append(EmbeddingVector(tuple(float(v) for v in vec), dim, self.provider_tag))
        return out


class RemoteCrossScorer(HttpProvider):
    def score(self, pairs: list[tuple[str, str]]) -> list[float]:
        if not pairs:
            return []
        body = self._post("/cross", {"pairs": [[q, p] for q, p in pairs]})
        scores = body["scores"]
        if len(scores) != len(pairs):
            raise TransportError(
                f"/cross returned {len(scores)} scores for {len(pairs)} pairs", RETRIES
            )
        return [clamp_unit(float(s)) for s in scores]


class RemoteChatProvider(HttpProvider):
    def chat(self, messages: list[dict], temperature: float = 0.0) -> str:
        body = self._post("/chat", {"messages": messages, "temperature": temperature})
        return str(body["content"])
