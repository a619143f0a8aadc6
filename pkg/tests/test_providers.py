import httpx
import pytest

from regrel.providers import (
    ProviderConfig,
    RemoteChatProvider,
    RemoteCrossScorer,
    RemoteEmbedder,
    TransportError,
)


def _client(handler):
    transport = httpx.MockTransport(handler)
    return httpx.Client(transport=transport, base_url="http://models.test")


def test_remote_embedder_parses_vectors():
    def handler(request):
        assert request.url.path == "/embed"
        return httpx.Response(200, json={"dim": 3, "vectors": [[1, 0, 0], [0, 1, 0]]})

    embedder = RemoteEmbedder(ProviderConfig("http://models.test"), _client(handler))
    vectors = embedder.embed(["a", "b"])
    assert [v.values for v in vectors] == [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]
    assert all(v.provider_tag == "remote:http://models.test" for v in vectors)


def test_remote_embedder_rejects_wrong_count():
    def handler(request):
        return httpx.Response(200, json={"dim": 2, "vectors": [[1, 0]]})

    embedder = RemoteEmbedder(ProviderConfig("http://models.test"), _client(handler))
    with pytest.raises(TransportError, match="1 vectors for 2 texts"):
        embedder.embed(["a", "b"])


def test_remote_cross_clamps_out_of_range():
    def handler(request):
        return httpx.Response(200, json={"scores": [1.7, -0.2, 0.4]})

    cross = RemoteCrossScorer(ProviderConfig("http://models.test"), _client(handler))
    assert cross.score([("q", "a"), ("q", "b"), ("q", "c")]) == [1.0, 0.0, 0.4]


def test_retry_then_typed_failure(monkeypatch):
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        return httpx.Response(500, text="boom")

    monkeypatch.setattr("regrel.providers.BACKOFF_SECONDS", 0.0)
    chat = RemoteChatProvider(ProviderConfig("http://models.test"), _client(handler))
    with pytest.raises(TransportError, match="after 1 retries"):
        chat.chat([{"role": "user", "content": "hi"}])
    assert calls["n"] == 2  # one retry, then the typed failure


def test_retry_recovers(monkeypatch):
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        if calls["n"] == 1:
            return httpx.Response(502, text="flaky")
        return httpx.Response(200, json={"content": "ok"})

    monkeypatch.setattr("regrel.providers.BACKOFF_SECONDS", 0.0)
    chat = RemoteChatProvider(ProviderConfig("http://models.test"), _client(handler))
    assert chat.chat([{"role": "user", "content": "hi"}]) == "ok"
    assert calls["n"] == 2


def test_auth_header_from_config():
    seen = {}

    def handler(request):
        seen["auth"] = request.headers.get("authorization")
        return httpx.Response(200, json={"content": "ok"})

    config = ProviderConfig("http://models.test", token="secret-token")
    transport = httpx.MockTransport(handler)
    client = httpx.Client(
        transport=transport, base_url=config.base_url,
        headers={"Authorization": f"Bearer {config.token}"},
    )
    RemoteChatProvider(config, client).chat([{"role": "user", "content": "x"}])
    assert seen["auth"] == "Bearer secret-token"


def test_config_from_env(monkeypatch):
    monkeypatch.setenv("REGREL_PROVIDER_URL", "http://models.test/")
    monkeypatch.setenv("REGREL_PROVIDER_TOKEN", "tok")
    config = ProviderConfig.from_env()
    assert config.base_url == "http://models.test"
    assert config.token == "tok"
    monkeypatch.delenv("REGREL_PROVIDER_URL")
    with pytest.raises(TransportError, match="REGREL_PROVIDER_URL"):
        ProviderConfig.from_env()
