"""Regulatory document corpus: ingestion, paragraph records, and study sets.

A corpus is an immutable collection of documents and context-tagged text
paragraphs. Study sets are corpora whose paragraphs additionally carry a
relevance group (A: business- and process-relevant, B: business-relevant
only, C: neither); group membership is relative to a use case, so it lives
in the study-set file rather than the raw corpus.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

log = logging.getLogger(__name__)

GROUPS = ("A", "B", "C")

PARAGRAPH_KEYS = ("para_id", "doc_id", "section_title", "subsection", "body")
DOCUMENT_KEYS = ("doc_id", "title", "origin", "jurisdiction", "applicable_domain", "source_uri")


class IngestError(ValueError):
    """Input that cannot be accepted as a corpus (duplicate ids, bad tags...)."""


@dataclass(frozen=True)
class RegulatoryDocument:
    doc_id: str
    title: str
    origin: str  # "internal" | "external"
    jurisdiction: str
    applicable_domain: str  # free text or "domain-independent"
    source_uri: str | None = None

    def __post_init__(self):
        if self.origin not in ("internal", "external"):
            raise IngestError(f"document {self.doc_id}: unknown origin {self.origin!r}")

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "title": self.title,
            "origin": self.origin,
            "jurisdiction": self.jurisdiction,
            "applicable_domain": self.applicable_domain,
            "source_uri": self.source_uri,
        }


@dataclass(frozen=True)
class Paragraph:
    para_id: str
    doc_id: str
    section_title: str
    body: str
    subsection: str | None = None
    group: str | None = None  # "A" | "B" | "C"; None in raw corpora
    gold_type_hint: str | None = None  # group-A hint only; gold truth lives elsewhere

    def __post_init__(self):
        if not self.body or not self.body.strip():
            raise IngestError(f"paragraph {self.para_id}: empty body")
        if self.group is not None and self.group not in GROUPS:
            raise IngestError(f"paragraph {self.para_id}: unknown group tag {self.group!r}")

    def to_json(self, with_group: bool = True) -> dict:
        obj = {
            "para_id": self.para_id,
            "doc_id": self.doc_id,
            "section_title": self.section_title,
            "subsection": self.subsection,
            "body": self.body,
        }
        if with_group and self.group is not None:
            obj["group"] = self.group
            if self.gold_type_hint is not None:
                obj["gold_type_hint"] = self.gold_type_hint
        return obj


@dataclass(frozen=True)
class IngestFlag:
    source: str
    para_id: str | None
    reason: str
    snippet: str
    skipped: bool


@dataclass
class IngestReport:
    flags: list[IngestFlag] = field(default_factory=list)

    @property
    def skipped(self) -> list[IngestFlag]:
        return [f for f in self.flags if f.skipped]

    def add(self, source, para_id, reason, snippet, skipped):
        self.flags.append(IngestFlag(source, para_id, reason, snippet[:120], skipped))


@dataclass
class Corpus:
    documents: dict[str, RegulatoryDocument]
    paragraphs: list[Paragraph]
    report: IngestReport = field(default_factory=IngestReport)

    def paragraph(self, para_id: str) -> Paragraph:
        return self._by_id[para_id]

    @property
    def _by_id(self) -> dict[str, Paragraph]:
        return {p.para_id: p for p in self.paragraphs}


# --- table-of-contents / table detection -----------------------------------
#
# The heuristic is deliberately cheap and transparent: every skip is visible
# in the ingestion report.

_HEADING_LINE = re.compile(r"^\s*(\d+(?:\.\d+)*[.):]?|[A-Za-z][.)]|[ivxlcIVXLC]+[.)])\s+(.*)$")
_INLINE_HEADING = re.compile(r"\b\d+(?:\.\d+)*[.)]\s")
_MULTI_CELL = re.compile(r"\t| {2,}")


def suspect_fragment(body: str) -> str | None:
    """Return a reason string when a fragment looks like ToC or table content."""
    lines = [ln for ln in body.splitlines() if ln.strip()]
    consecutive = 0
    for line in lines:
        m = _HEADING_LINE.match(line)
        if m and len(m.group(2).split()) < 5:
            consecutive += 1
            if consecutive >= 3:
                return "suspected table of contents"
        else:
            consecutive = 0
    # single-line ToCs: >=3 numbered headings with <5 words between markers
    for line in lines:
        parts = _INLINE_HEADING.split(line)
        if len(parts) >= 4 and all(len(p.split()) < 5 for p in parts[1:]):
            return "suspected table of contents"
    if lines:
        cellish = sum(1 for ln in lines if len(_MULTI_CELL.split(ln.strip())) >= 3)
        if cellish / len(lines) > 0.5:
            return "suspected table"
    return None


# --- ingestion ---------------------------------------------------------------


def read_jsonl(path: str | Path) -> Iterable[dict]:
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path}:{n}: invalid json ({exc.msg})") from exc


def write_jsonl(path: str | Path, objects: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objects:
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_documents(path: str | Path) -> dict[str, RegulatoryDocument]:
    docs: dict[str, RegulatoryDocument] = {}
    for obj in read_jsonl(path):
        doc = RegulatoryDocument(
            doc_id=obj["doc_id"],
            title=obj["title"],
            origin=obj["origin"],
            jurisdiction=obj.get("jurisdiction", ""),
            applicable_domain=obj.get("applicable_domain", ""),
            source_uri=obj.get("source_uri"),
        )
        if doc.doc_id in docs:
            raise IngestError(f"duplicate doc_id: {doc.doc_id}")
        docs[doc.doc_id] = doc
    return docs


def _paragraph_from_record(obj: dict, source: str) -> Paragraph:
    missing = [k for k in ("para_id", "doc_id", "body") if k not in obj]
    if missing:
        raise IngestError(f"{source}: record missing fields {missing}")
    return Paragraph(
        para_id=str(obj["para_id"]),
        doc_id=str(obj["doc_id"]),
        section_title=obj.get("section_title", "") or "",
        subsection=obj.get("subsection"),
        body=obj["body"],
        group=obj.get("group"),
        gold_type_hint=obj.get("gold_type_hint"),
    )


def _plaintext_fragments(path: Path) -> Iterable[tuple[str, str]]:
    text = path.read_text(encoding="utf-8")
    idx = 0
    for block in re.split(r"\n\s*\n", text):
        if block.strip():
            idx += 1
            yield f"{path.stem}-p{idx:04d}", block.strip()


def ingest_documents(
    files: Iterable[str | Path],
    format: str = "jsonl",
    documents: str | Path | None = None,
) -> Corpus:
    """Ingest paragraph sources into a corpus.

    jsonl sources carry one paragraph object per line (keys as in
    ``corpus.jsonl`` / ``study_set.jsonl``); plaintext sources are split on
    blank lines, with ids derived from the filename. Fragments that look like
    table-of-contents or table content are skipped and reported, never
    silently dropped. Empty bodies are skipped and reported. Duplicate
    para_ids and unknown group tags reject the whole ingestion.
    """
    if format not in ("jsonl", "plaintext"):
        raise IngestError(f"unknown format: {format!r}")
    docs = load_documents(documents) if documents else {}
    report = IngestReport()
    paragraphs: list[Paragraph] = []
    seen: set[str] = set()

    def admit(para: Paragraph, source: str) -> None:
        if para.para_id in seen:
            raise IngestError(f"duplicate para_id: {para.para_id}")
        if docs:
            doc = docs.get(para.doc_id)
            if doc is None:
                report.add(source, para.para_id, f"unknown doc_id {para.doc_id}", para.body, False)
            elif para.group == "C" and doc.origin == "internal":
                raise IngestError(
                    f"paragraph {para.para_id}: group C in internal document {para.doc_id}"
                )
        reason = suspect_fragment(para.body)
        if reason is not None:
            report.add(source, para.para_id, reason, para.body, True)
            return
        seen.add(para.para_id)
        paragraphs.append(para)

    for file in files:
        path = Path(file)
        source = str(path)
        if format == "jsonl":
            for obj in read_jsonl(path):
                body = obj.get("body")
                if body is None or not str(body).strip():
                    report.add(source, obj.get("para_id"), "empty body", str(body or ""), True)
                    continue
                admit(_paragraph_from_record(obj, source), source)
        else:
            doc_id = path.stem
            docs.setdefault(
                doc_id,
                RegulatoryDocument(doc_id, path.name, "external", "", "domain-independent"),
            )
            for para_id, body in _plaintext_fragments(path):
                admit(
                    Paragraph(para_id=para_id, doc_id=doc_id, section_title="", body=body),
                    source,
                )

    for flag in report.flags:
        log.info("ingest flag (%s): %s %s", flag.source, flag.para_id, flag.reason)
    return Corpus(documents=docs, paragraphs=paragraphs, report=report)


def export_corpus(corpus: Corpus, path: str | Path, with_group: bool = True) -> None:
    write_jsonl(path, (p.to_json(with_group=with_group) for p in corpus.paragraphs))


# --- study sets --------------------------------------------------------------


@dataclass(frozen=True)
class Composition:
    """Paragraph counts per group, with the group-A split by relevance type.

    ``group_a`` counts the group tag itself; the compliance/informative split
    comes from ``gold_type_hint`` and may undercount when hints are absent.
    """

    total: int
    group_a: int
    group_a_compliance: int
    group_a_informative: int
    group_b: int
    group_c: int

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "group_a": self.group_a,
            "group_a_compliance": self.group_a_compliance,
            "group_a_informative": self.group_a_informative,
            "group_b": self.group_b,
            "group_c": self.group_c,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Composition":
        a_c = obj["group_a_compliance"]
        a_i = obj["group_a_informative"]
        return cls(
            total=obj["total"],
            group_a=obj.get("group_a", a_c + a_i),
            group_a_compliance=a_c,
            group_a_informative=a_i,
            group_b=obj["group_b"],
            group_c=obj["group_c"],
        )


@dataclass
class StudySet:
    use_case_id: str
    paragraphs: list[Paragraph]
    documents: dict[str, RegulatoryDocument] = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for p in self.paragraphs:
            if p.para_id in seen:
                raise IngestError(f"duplicate para_id in study set: {p.para_id}")
            seen.add(p.para_id)
            if p.group is None:
                raise IngestError(f"study-set paragraph {p.para_id} has no group tag")

    def __len__(self) -> int:
        return len(self.paragraphs)

    def paragraph(self, para_id: str) -> Paragraph:
        for p in self.paragraphs:
            if p.para_id == para_id:
                return p
        raise KeyError(para_id)

    @property
    def para_ids(self) -> list[str]:
        return [p.para_id for p in self.paragraphs]

    @property
    def groups(self) -> dict[str, str]:
        return {p.para_id: p.group for p in self.paragraphs}

    @property
    def composition(self) -> Composition:
        a = sum(1 for p in self.paragraphs if p.group == "A")
        a_c = sum(1 for p in self.paragraphs if p.group == "A" and p.gold_type_hint == "compliance")
        a_i = sum(
            1 for p in self.paragraphs if p.group == "A" and p.gold_type_hint == "informative"
        )
        b = sum(1 for p in self.paragraphs if p.group == "B")
        c = sum(1 for p in self.paragraphs if p.group == "C")
        return Composition(len(self.paragraphs), a, a_c, a_i, b, c)


def load_study_set(
    path: str | Path,
    use_case_id: str | None = None,
    documents: str | Path | None = None,
) -> StudySet:
    corpus = ingest_documents([path], format="jsonl", documents=documents)
    return StudySet(
        use_case_id=use_case_id or Path(path).stem,
        paragraphs=corpus.paragraphs,
        documents=corpus.documents,
    )


def save_study_set(study_set: StudySet, path: str | Path) -> None:
    write_jsonl(path, (p.to_json(with_group=True) for p in study_set.paragraphs))


@dataclass(frozen=True)
class ValidationEntry:
    constraint: str
    expected: int
    actual: int

    @property
    def passed(self) -> bool:
        return self.expected == self.actual


@dataclass
class ValidationReport:
    entries: list[ValidationEntry]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "entries": [
                {
                    "constraint": e.constraint,
                    "expected": e.expected,
                    "actual": e.actual,
                    "passed": e.passed,
                }
                for e in self.entries
            ],
        }


def validate_study_set(study_set: StudySet, expected: Composition) -> ValidationReport:
    """Check a study set's composition against an expected spec. Always returns
    a report; failures are entries, never exceptions."""
    actual = study_set.composition
    entries = [
        ValidationEntry("total paragraphs", expected.total, actual.total),
        ValidationEntry(
            "group A compliance-relevant", expected.group_a_compliance, actual.group_a_compliance
        ),
        ValidationEntry(
            "group A informative-relevant", expected.group_a_informative, actual.group_a_informative
        ),
        ValidationEntry("group B", expected.group_b, actual.group_b),
        ValidationEntry("group C", expected.group_c, actual.group_c),
    ]
    return ValidationReport(entries)
