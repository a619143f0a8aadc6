import json

import pytest
from fastapi.testclient import TestClient

from regrel.corpus import save_study_set, write_jsonl
from regrel.labels import RelevanceType
from regrel.llm_judge import LlmJudgment
from regrel.retrieval import METHOD_A, Ranking
from regrel.service import (
    ConflictError,
    Store,
    StoreError,
    create_app,
    items_from_judgments,
    items_from_ranking,
)


@pytest.fixture
def store(tmp_path, small_set, small_model):
    store = Store(tmp_path / "store")
    set_path = tmp_path / "tiny.jsonl"
    save_study_set(small_set, set_path)
    docs_path = tmp_path / "documents.jsonl"
    write_jsonl(docs_path, (d.to_json() for d in small_set.documents.values()))
    store.add_study_set(set_path, documents=docs_path)
    store.add_process(small_model)
    return store


def _ranking():
    entries = [("pa-1", 0.9), ("pa-2", 0.8), ("pb-1", 0.7), ("pc-1", 0.6)]
    return Ranking("s1-t1", entries, METHOD_A, "reranked")


def _enqueue_ranking(store, top_k=3):
    run = store.create_run("rank", {"set_id": "tiny", "model_id": "m1", "level": 3},
                           run_id="run-1")
    items = items_from_ranking(run.run_id, _ranking(), level=3, top_k=top_k, method=METHOD_A)
    return run, store.enqueue_items(items)


def test_enqueue_top_k(store):
    _, added = _enqueue_ranking(store, top_k=3)
    assert added == 3
    assert len(store.queue()) == 3


def test_reenqueue_adds_nothing(store):
    run, _ = _enqueue_ranking(store, top_k=3)
    items = items_from_ranking(run.run_id, _ranking(), level=3, top_k=3, method=METHOD_A)
    assert store.enqueue_items(items) == 0
    assert len(store.queue()) == 3


def test_enqueue_from_judgments_filters_irrelevant(store, small_model):
    run = store.create_run("judge", {"set_id": "tiny", "model_id": "m1"}, run_id="run-j")
    judgments = [
        LlmJudgment("pa-1", RelevanceType.COMPLIANCE, {"s1": RelevanceType.COMPLIANCE},
                    {"s1-t1": RelevanceType.COMPLIANCE}, "reason", "{}"),
        LlmJudgment("pb-1", RelevanceType.IRRELEVANT, {}, {}, "none", "{}"),
    ]
    items = items_from_judgments(run.run_id, judgments, small_model)
    added = store.enqueue_items(items)
    assert added == 3  # level1 + level2 + level3 for pa-1 only
    assert all(i.para_id == "pa-1" for i in store.queue())


def test_decision_confirm_updates_gold(store, small_model):
    run, _ = _enqueue_ranking(store)
    item = store.queue()[0]
    # ranking items carry no machine label: confirm is refused, retype works
    with pytest.raises(StoreError, match="no machine label"):
        store.decide(item.item_id, "confirm", "alice", "key-0")
    result = store.decide(item.item_id, "retype", "alice", "key-1", new_type="compliance")
    assert result["item"]["status"] == "retyped"
    gold = store.gold_standard()
    labels = gold.labels[item.para_id]
    assert labels.level3["s1-t1"] is RelevanceType.COMPLIANCE
    assert labels.level2["s1"] is RelevanceType.COMPLIANCE  # lifted
    assert labels.level1 is RelevanceType.COMPLIANCE  # lifted
    assert store.item(item.item_id).expert_label == "compliance"


def test_decision_reject_records_irrelevant(store):
    _enqueue_ranking(store)
    item = store.queue()[0]
    result = store.decide(item.item_id, "reject", "bob", "key-2")
    assert result["item"]["status"] == "rejected"
    assert result["item"]["expert_label"] == "irrelevant"
    gold = store.gold_standard()
    assert not gold.labels[item.para_id].level3.get(
        "s1-t1", RelevanceType.IRRELEVANT
    ).relevant


def test_reject_keeps_forced_ancestors_and_flags(store, small_model):
    run = store.create_run("judge", {"set_id": "tiny", "model_id": "m1"}, run_id="run-j")
    judgments = [
        LlmJudgment("pa-1", RelevanceType.COMPLIANCE, {"s1": RelevanceType.COMPLIANCE},
                    {"s1-t1": RelevanceType.COMPLIANCE}, "r", "{}"),
    ]
    store.enqueue_items(items_from_judgments(run.run_id, judgments, small_model))
    l3 = next(i for i in store.queue() if i.level == 3)
    l2 = next(i for i in store.queue() if i.level == 2)
    store.decide(l3.item_id, "confirm", "alice", "k1")
    # rejecting the sub-process while its task stays relevant keeps the forced label
    store.decide(l2.item_id, "reject", "alice", "k2")
    gold = store.gold_standard()
    assert gold.labels["pa-1"].level2["s1"] is RelevanceType.COMPLIANCE
    assert any("relevant descendants remain" in f for f in store.gold_flags)


def test_decision_idempotency_key_replay(store):
    _enqueue_ranking(store)
    item = store.queue()[0]
    first = store.decide(item.item_id, "reject", "alice", "key-same")
    replay = store.decide(item.item_id, "reject", "alice", "key-same")
    assert replay == first


def test_double_decision_conflicts(store):
    _enqueue_ranking(store)
    item = store.queue()[0]
    store.decide(item.item_id, "reject", "alice", "key-a")
    with pytest.raises(ConflictError) as exc_info:
        store.decide(item.item_id, "retype", "bob", "key-b", new_type="informative")
    assert exc_info.value.current["status"] == "rejected"


def test_crash_replay_reproduces_state(tmp_path, store):
    _enqueue_ranking(store)
    item = store.queue()[0]
    store.decide(item.item_id, "retype", "alice", "key-1", new_type="informative")
    store.decide(store.queue()[0].item_id, "reject", "alice", "key-2")
    before = store.state_dump()
    reopened = Store(store.root)  # no snapshot was written; pure log replay
    assert reopened.state_dump() == before
    store.snapshot()
    again = Store(store.root)
    assert again.state_dump() == before


def test_snapshot_plus_tail_replay(tmp_path, store):
    _enqueue_ranking(store)
    store.snapshot()
    item = store.queue()[0]
    store.decide(item.item_id, "reject", "alice", "key-after-snap")
    reopened = Store(store.root)
    assert reopened.state_dump() == store.state_dump()


def test_gold_import_export_round_trip(store, small_model, small_gold):
    records = [
        {"para_id": pid, **labels.to_json(), "provenance": "fixture"}
        for pid, labels in small_gold.items()
    ]
    assert store.import_gold(records, model_id="m1") == len(records)
    exported = store.export_gold()
    reimported_store = Store(store.root.parent / "store2")
    reimported_store.import_gold(exported)
    assert reimported_store.export_gold() == exported


def test_gold_import_validates_closure(store):
    bad = [{"para_id": "p", "level1": "irrelevant",
            "level2": {"s1": "compliance"}, "level3": {}}]
    with pytest.raises(Exception, match="irrelevant"):
        store.import_gold(bad, model_id="m1")


def test_audit_trail_covers_gold(store, small_gold):
    _enqueue_ranking(store)
    item = store.queue()[0]
    store.decide(item.item_id, "retype", "alice", "key-1", new_type="compliance")
    records = [{"para_id": "pb-1", "level1": "irrelevant", "level2": {}, "level3": {}}]
    store.import_gold(records, model_id="m1")
    kinds = {a["kind"] for a in store.audit_log}
    assert kinds == {"decision", "gold_import"}
    # every gold label is reachable from a decision or an import
    assert set(store.gold_standard().labels) == {item.para_id, "pb-1"}


# --- HTTP API ---------------------------------------------------------------------


@pytest.fixture
def client(store):
    return TestClient(create_app(store, run_jobs_inline=True))


def test_api_queue_paging_and_enrichment(client, store):
    _enqueue_ranking(store, top_k=3)
    first = client.get("/api/queue", params={"page": 1, "page_size": 2}).json()
    assert first["total"] == 3
    assert len(first["items"]) == 2
    second = client.get("/api/queue", params={"page": 2, "page_size": 2}).json()
    assert len(second["items"]) == 1
    assert first["items"][0]["item_id"] != second["items"][0]["item_id"]
    item = first["items"][0]
    assert item["node"]["node_id"] == "s1-t1"
    assert item["paragraph"]["document"]["doc_id"]
    assert "pending" in first["progress"]


def test_api_decision_idempotent(client, store):
    _enqueue_ranking(store)
    item_id = store.queue()[0].item_id
    body = {"action": "retype", "type": "informative", "reviewer": "alice",
            "idempotency_key": "kk-1"}
    first = client.post(f"/api/items/{item_id}/decision", json=body)
    assert first.status_code == 200
    replay = client.post(f"/api/items/{item_id}/decision", json=body)
    assert replay.status_code == 200
    assert replay.json() == first.json()
    conflict = client.post(
        f"/api/items/{item_id}/decision",
        json={"action": "reject", "reviewer": "bob", "idempotency_key": "kk-2"},
    )
    assert conflict.status_code == 409
    assert conflict.json()["current"]["status"] == "retyped"


def test_api_process_endpoint(client):
    response = client.get("/api/process/m1")
    assert response.status_code == 200
    assert response.json()["model_id"] == "m1"
    assert client.get("/api/process/nope").status_code == 404


def test_api_rank_run_and_report(client, store, small_gold):
    records = [{"para_id": pid, **labels.to_json()} for pid, labels in small_gold.items()]
    store.import_gold(records, model_id="m1")
    response = client.post(
        "/api/runs/rank",
        json={"set_id": "tiny", "model_id": "m1", "method": "A", "level": 1,
              "initial_k": 4, "enqueue_top_k": 2},
    )
    assert response.status_code == 200
    run_id = response.json()["run_id"]
    status = client.get(f"/api/runs/{run_id}").json()
    assert status["status"] == "done"
    assert (store.run_dir(run_id) / "ranking.jsonl").exists()
    assert len(store.queue()) == 2
    report = client.get(f"/api/reports/{run_id}")
    assert report.status_code == 200
    assert "levels" in report.json()


def test_api_judge_run_with_scripted_provider(client, store, tmp_path, small_set):
    replies_path = tmp_path / "replies.jsonl"
    lines = [json.dumps({"content": json.dumps({"level1": "irrelevant"})})
             for _ in range(len(small_set))]
    replies_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    response = client.post(
        "/api/runs/judge",
        json={"set_id": "tiny", "model_id": "m1", "iteration": "v1",
              "provider": "scripted", "replies_path": str(replies_path)},
    )
    assert response.status_code == 200
    run_id = response.json()["run_id"]
    assert client.get(f"/api/runs/{run_id}").json()["status"] == "done"
    assert (store.run_dir(run_id) / "judgments.jsonl").exists()


def test_api_failed_run_is_recorded(client, store, tmp_path):
    # scripted provider with too few replies: the job fails, the run says so
    replies_path = tmp_path / "short.jsonl"
    replies_path.write_text(json.dumps({"content": json.dumps({"level1": "irrelevant"})}) + "\n")
    response = client.post(
        "/api/runs/judge",
        json={"set_id": "tiny", "model_id": "m1", "provider": "scripted",
              "replies_path": str(replies_path)},
    )
    assert response.status_code == 200
    run = client.get(f"/api/runs/{response.json()['run_id']}").json()
    assert run["status"] == "failed"
    assert "exhausted" in run["error"]


def test_api_gold_export_import(client, store, small_gold):
    records = [{"para_id": pid, **labels.to_json()} for pid, labels in small_gold.items()]
    response = client.post("/api/gold/import", json={"records": records, "model_id": "m1"})
    assert response.status_code == 200
    exported = client.get("/api/gold/export")
    assert exported.status_code == 200
    lines = [json.loads(l) for l in exported.text.splitlines() if l.strip()]
    assert {l["para_id"] for l in lines} == set(small_gold)
