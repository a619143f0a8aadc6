import json
import logging

import pytest

from regrel.labels import RelevanceType
from regrel.llm_judge import (
    CLEAR_RELATIONS_LINE,
    RECALL_PRIORITY_LINE,
    JudgeConfig,
    LlmJudgment,
    ParseError,
    ScriptedChatProvider,
    apply_subprocess_spread_filter,
    build_prompt,
    judge,
    judge_study_set,
    parse_reply,
    write_judgments,
)
from regrel.process import ProcessModel, ProcessNode


class StubChatProvider:
    """Counts requests and replies from a fixed function."""

    def __init__(self, reply_fn=None):
        self.requests = 0
        self.temperatures = []
        self.reply_fn = reply_fn or (lambda prompt: json.dumps(
            {"level1": "irrelevant", "level2": {}, "level3": {}, "justification": "none"}
        ))

    def chat(self, messages, temperature=0.0):
        self.requests += 1
        self.temperatures.append(temperature)
        return self.reply_fn(messages[0]["content"])


@pytest.fixture
def bundle(small_model, small_set):
    para = small_set.paragraphs[0]
    doc = small_set.documents[para.doc_id]
    return build_prompt(small_model, para, doc, "v3")


def test_blocks_present_in_order(bundle):
    r = bundle.rendered
    i_task = r.find(bundle.task_description)
    i_business = r.find(bundle.business_block)
    i_regulation = r.find(bundle.regulation_block)
    assert 0 <= i_task < i_business < i_regulation


def test_iteration_deltas(small_model, small_set):
    para = small_set.paragraphs[0]
    doc = small_set.documents[para.doc_id]
    v1 = build_prompt(small_model, para, doc, "v1")
    v2 = build_prompt(small_model, para, doc, "v2")
    v3 = build_prompt(small_model, para, doc, "v3")
    assert CLEAR_RELATIONS_LINE not in v1.rendered
    assert CLEAR_RELATIONS_LINE in v2.rendered
    assert CLEAR_RELATIONS_LINE in v3.rendered
    assert RECALL_PRIORITY_LINE not in v2.rendered
    assert RECALL_PRIORITY_LINE in v3.rendered
    # v2 adds document content/applicability metadata to the regulation block
    assert "applicability" not in v1.regulation_block
    assert "applicability" in v2.regulation_block
    assert doc.jurisdiction in v2.regulation_block


def test_blocks_shared_across_paragraphs(small_model, small_set):
    docs = small_set.documents
    bundles = [
        build_prompt(small_model, p, docs[p.doc_id], "v2") for p in small_set.paragraphs[:2]
    ]
    assert bundles[0].task_description == bundles[1].task_description
    assert bundles[0].business_block == bundles[1].business_block
    assert bundles[0].regulation_block != bundles[1].regulation_block


def test_prompt_is_deterministic(small_model, small_set):
    para = small_set.paragraphs[0]
    doc = small_set.documents[para.doc_id]
    assert build_prompt(small_model, para, doc, "v3").rendered == \
        build_prompt(small_model, para, doc, "v3").rendered


def test_word_count_reported_and_v3_warning(bundle, caplog, small_model, small_set):
    assert bundle.word_count == len(bundle.rendered.split())
    para = small_set.paragraphs[0]
    doc = small_set.documents[para.doc_id]
    with caplog.at_level(logging.WARNING):
        build_prompt(small_model, para, doc, "v3")  # tiny model -> short prompt
    assert any("outside the expected" in r.message for r in caplog.records)
    caplog.clear()
    with caplog.at_level(logging.WARNING):
        build_prompt(small_model, para, doc, "v2")  # budget only checked for v3
    assert not any("outside the expected" in r.message for r in caplog.records)


def test_incomplete_model_rejected(small_model, small_set):
    nodes = [
        ProcessNode(n.node_id, n.level, n.name,
                    "" if n.node_id == "s1-t1" else n.description, n.parent_id, n.kind)
        for n in small_model.nodes
    ]
    incomplete = ProcessModel("m1", small_model.context, nodes, complete=False)
    para = small_set.paragraphs[0]
    doc = small_set.documents[para.doc_id]
    with pytest.raises(ValueError, match="s1-t1"):
        build_prompt(incomplete, para, doc, "v1")


def test_parse_consistent_negative(bundle):
    raw = json.dumps({"level1": "irrelevant", "level2": {}, "level3": {},
                      "justification": "no relation"})
    judgment = parse_reply(raw, bundle)
    assert judgment.level1 is RelevanceType.IRRELEVANT
    assert judgment.level2 == {} and judgment.level3 == {}
    assert judgment.raw_reply == raw
    assert judgment.para_id == bundle.para_id


def test_parse_closure_violation_strict(bundle):
    raw = json.dumps({"level1": "irrelevant", "level3": {"s2-t1": "compliance"}})
    with pytest.raises(ParseError, match="propagation violation"):
        parse_reply(raw, bundle, closure_mode="strict")


def test_parse_closure_violation_lenient_autocloses(bundle, caplog):
    raw = json.dumps({"level1": "irrelevant", "level3": {"s2-t1": "compliance"}})
    with caplog.at_level(logging.WARNING):
        judgment = parse_reply(raw, bundle, closure_mode="lenient")
    assert judgment.level1 is RelevanceType.COMPLIANCE
    assert judgment.level2["s2"] is RelevanceType.COMPLIANCE
    assert any("auto-closing" in r.message for r in caplog.records)


def test_lenient_closure_idempotent(bundle):
    raw = json.dumps({"level1": "irrelevant", "level3": {"s2-t1": "compliance"}})
    once = parse_reply(raw, bundle)
    again = parse_reply(json.dumps(once.to_reply_json()), bundle)
    assert once.labels.to_json() == again.labels.to_json()


def test_parse_unknown_node_named(bundle):
    raw = json.dumps({"level1": "compliance", "level2": {"bogus": "compliance"}})
    with pytest.raises(ParseError, match="bogus"):
        parse_reply(raw, bundle)


def test_parse_errors_carry_raw_reply(bundle):
    for raw in ("not json at all", "{\"level2\": {}}", "[1, 2]",
                json.dumps({"level1": "kind-of-relevant"})):
        with pytest.raises(ParseError) as exc_info:
            parse_reply(raw, bundle)
        assert exc_info.value.raw_reply == raw


def test_parse_accepts_fenced_json(bundle):
    raw = "```json\n{\"level1\": \"informative\"}\n```"
    judgment = parse_reply(raw, bundle)
    assert judgment.level1 is RelevanceType.INFORMATIVE


def test_round_trip_serialize_parse(bundle):
    original = LlmJudgment(
        para_id=bundle.para_id,
        level1=RelevanceType.COMPLIANCE,
        level2={"s1": RelevanceType.COMPLIANCE, "s2": RelevanceType.INFORMATIVE},
        level3={"s1-t1": RelevanceType.COMPLIANCE, "s2-t1": RelevanceType.INFORMATIVE},
        justification="traceable reasoning",
        raw_reply="",
    )
    raw = json.dumps(original.to_reply_json())
    parsed = parse_reply(raw, bundle)
    assert parsed.level1 == original.level1
    assert parsed.level2 == original.level2
    assert parsed.level3 == original.level3
    assert parsed.justification == original.justification


def test_judge_sends_single_request_with_pinned_temperature(bundle):
    provider = StubChatProvider()
    judge(provider, bundle, JudgeConfig(temperature=0.0))
    assert provider.requests == 1
    assert provider.temperatures == [0.0]


def test_judge_study_set_one_request_per_paragraph(small_model, small_set):
    provider = StubChatProvider()
    judgments = judge_study_set(provider, small_model, small_set)
    assert provider.requests == len(small_set)
    assert [j.para_id for j in judgments] == small_set.para_ids


def test_judge_study_set_concurrent_matches_serial(small_model, small_set):
    serial = judge_study_set(StubChatProvider(), small_model, small_set, max_in_flight=1)
    threaded = judge_study_set(StubChatProvider(), small_model, small_set, max_in_flight=4)
    assert [j.to_json() for j in serial] == [j.to_json() for j in threaded]


def test_subprocess_spread_filter():
    judgment = LlmJudgment(
        para_id="p",
        level1=RelevanceType.COMPLIANCE,
        level2={"s1": RelevanceType.COMPLIANCE, "s2": RelevanceType.INFORMATIVE,
                "s3": RelevanceType.COMPLIANCE},
        level3={},
        justification="broad",
        raw_reply="",
    )
    filtered = apply_subprocess_spread_filter(judgment, threshold=3)
    assert filtered.level1 is RelevanceType.IRRELEVANT
    assert filtered.level2 == {} and filtered.level3 == {}
    untouched = apply_subprocess_spread_filter(judgment, threshold=4)
    assert untouched.level1 is RelevanceType.COMPLIANCE


def test_scripted_provider_and_jsonl_output(tmp_path, small_model, small_set):
    replies = [
        json.dumps({"level1": "compliance", "level2": {"s1": "compliance"},
                    "level3": {"s1-t1": "compliance"}, "justification": "matches registration"})
    ] + [json.dumps({"level1": "irrelevant"})] * (len(small_set) - 1)
    provider = ScriptedChatProvider(replies)
    judgments = judge_study_set(provider, small_model, small_set)
    assert provider.requests == len(small_set)
    out = tmp_path / "judgments.jsonl"
    write_judgments(out, judgments)
    lines = [json.loads(l) for l in out.read_text().splitlines()]
    assert lines[0]["para_id"] == small_set.para_ids[0]
    assert lines[0]["raw_reply"] == replies[0]
