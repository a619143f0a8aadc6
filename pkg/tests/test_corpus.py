import json

import pytest

from regrel.corpus import (
    Composition,
    IngestError,
    Paragraph,
    StudySet,
    export_corpus,
    ingest_documents,
    load_study_set,
    suspect_fragment,
    validate_study_set,
    write_jsonl,
)


def _records():
    return [
        {"para_id": "p1", "doc_id": "d1", "section_title": "Part 1", "subsection": None,
         "body": "The provider must keep records of each transaction."},
        {"para_id": "p2", "doc_id": "d1", "section_title": "Part 1", "subsection": "s2",
         "body": "A report is lodged with the regulator every quarter."},
        {"para_id": "p3", "doc_id": "d2", "section_title": "Part 4", "subsection": None,
         "body": "Breaches are notified to affected customers without delay."},
    ]


def test_jsonl_identity_ingestion(tmp_path):
    path = tmp_path / "corpus.jsonl"
    write_jsonl(path, _records())
    corpus = ingest_documents([path], format="jsonl")
    assert len(corpus.paragraphs) == 3
    assert corpus.report.flags == []
    assert [p.para_id for p in corpus.paragraphs] == ["p1", "p2", "p3"]


def test_toc_fragment_skipped_and_flagged(tmp_path):
    # >=3 consecutive numbered headings with <5 words each
    toc_body = "1. Introduction\n2. Scope of application\n3. Definitions\n4. General duties"
    records = _records() + [
        {"para_id": "p4", "doc_id": "d1", "section_title": "ToC", "body": toc_body}
    ]
    path = tmp_path / "corpus.jsonl"
    write_jsonl(path, records)
    corpus = ingest_documents([path], format="jsonl")
    assert [p.para_id for p in corpus.paragraphs] == ["p1", "p2", "p3"]
    assert len(corpus.report.skipped) == 1
    flag = corpus.report.skipped[0]
    assert flag.para_id == "p4"
    assert flag.reason == "suspected table of contents"


def test_inline_toc_detected():
    body = "1. Introduction 2. Scope 3. Definitions 4. Duties of officers"
    assert suspect_fragment(body) == "suspected table of contents"


def test_table_fragment_flagged():
    body = "Name\tLimit\tPeriod\nClaims\t500\t30 days\nAudits\t100\t90 days"
    assert suspect_fragment(body) == "suspected table"


def test_prose_not_flagged():
    body = ("The responsible officer must notify the regulator of a breach "
            "within 30 days. A register of all notifications is maintained.")
    assert suspect_fragment(body) is None


def test_duplicate_para_id_rejected(tmp_path):
    records = _records() + [dict(_records()[0])]
    path = tmp_path / "corpus.jsonl"
    write_jsonl(path, records)
    with pytest.raises(IngestError, match="duplicate para_id: p1"):
        ingest_documents([path], format="jsonl")


def test_empty_body_skipped_and_reported(tmp_path):
    records = _records() + [{"para_id": "p4", "doc_id": "d1", "section_title": "x", "body": "  "}]
    path = tmp_path / "corpus.jsonl"
    write_jsonl(path, records)
    corpus = ingest_documents([path], format="jsonl")
    assert len(corpus.paragraphs) == 3
    assert any(f.reason == "empty body" and f.para_id == "p4" for f in corpus.report.skipped)


def test_unknown_group_rejected(tmp_path):
    records = [{"para_id": "p1", "doc_id": "d1", "section_title": "x",
                "body": "Some text here.", "group": "D"}]
    path = tmp_path / "corpus.jsonl"
    write_jsonl(path, records)
    with pytest.raises(IngestError, match="unknown group"):
        ingest_documents([path], format="jsonl")


def test_group_c_in_internal_document_rejected(tmp_path):
    docs_path = tmp_path / "documents.jsonl"
    write_jsonl(docs_path, [{"doc_id": "d1", "title": "Manual", "origin": "internal",
                             "jurisdiction": "AU", "applicable_domain": "insurance",
                             "source_uri": None}])
    path = tmp_path / "set.jsonl"
    write_jsonl(path, [{"para_id": "p1", "doc_id": "d1", "section_title": "x",
                        "body": "Completely unrelated text.", "group": "C"}])
    with pytest.raises(IngestError, match="group C in internal document"):
        ingest_documents([path], format="jsonl", documents=docs_path)


def test_plaintext_ingestion_splits_blank_lines(tmp_path):
    source = tmp_path / "act.txt"
    source.write_text(
        "The first obligation applies to all providers of insurance products.\n\n"
        "The second obligation concerns record keeping duties for claims.\n",
        encoding="utf-8",
    )
    corpus = ingest_documents([source], format="plaintext")
    assert len(corpus.paragraphs) == 2
    assert corpus.paragraphs[0].para_id == "act-p0001"
    assert corpus.paragraphs[0].doc_id == "act"
    assert "act" in corpus.documents


def test_ingestion_deterministic(tmp_path):
    path = tmp_path / "corpus.jsonl"
    write_jsonl(path, _records())
    a = ingest_documents([path], format="jsonl")
    b = ingest_documents([path], format="jsonl")
    assert [p.to_json() for p in a.paragraphs] == [p.to_json() for p in b.paragraphs]


def test_export_reingest_round_trip(tmp_path):
    path = tmp_path / "corpus.jsonl"
    write_jsonl(path, _records())
    corpus = ingest_documents([path], format="jsonl")
    out = tmp_path / "exported.jsonl"
    export_corpus(corpus, out)
    again = ingest_documents([out], format="jsonl")
    assert [p.to_json() for p in again.paragraphs] == [p.to_json() for p in corpus.paragraphs]


def test_composition_groups_sum_to_total(small_set):
    comp = small_set.composition
    assert comp.group_a + comp.group_b + comp.group_c == comp.total == len(small_set)


def test_validate_study_set_pass(small_set):
    expected = Composition(total=4, group_a=2, group_a_compliance=1,
                           group_a_informative=1, group_b=1, group_c=1)
    report = validate_study_set(small_set, expected)
    assert report.passed
    assert all(e.passed for e in report.entries)


def test_validate_study_set_failures_are_entries(small_set):
    expected = Composition(total=5, group_a=2, group_a_compliance=2,
                           group_a_informative=1, group_b=1, group_c=1)
    report = validate_study_set(small_set, expected)
    assert not report.passed
    failed = {e.constraint for e in report.entries if not e.passed}
    assert failed == {"total paragraphs", "group A compliance-relevant"}


def test_study_set_requires_group():
    with pytest.raises(IngestError, match="no group tag"):
        StudySet("x", [Paragraph("p1", "d1", "s", "Some body text.")])


def test_load_study_set_reads_hints(tmp_path, small_set):
    path = tmp_path / "set.jsonl"
    write_jsonl(path, [p.to_json() for p in small_set.paragraphs])
    loaded = load_study_set(path, use_case_id="tiny")
    assert loaded.composition == small_set.composition


def test_paragraph_invariants():
    with pytest.raises(IngestError, match="empty body"):
        Paragraph("p1", "d1", "s", "   ")
    with pytest.raises(IngestError, match="unknown group"):
        Paragraph("p1", "d1", "s", "text", group="Z")


def test_invalid_json_line_names_location(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"para_id": "p1", "doc_id": "d", "body": "ok text"}\n{oops\n')
    with pytest.raises(IngestError, match="broken.jsonl:2"):
        ingest_documents([path], format="jsonl")


def test_record_missing_fields_rejected(tmp_path):
    path = tmp_path / "partial.jsonl"
    write_jsonl(path, [{"para_id": "p1", "body": "text without a document id"}])
    with pytest.raises(IngestError, match="missing fields"):
        ingest_documents([path], format="jsonl")


def test_unknown_format_rejected(tmp_path):
    with pytest.raises(IngestError, match="unknown format"):
        ingest_documents([], format="xml")
