"""Zero-shot relevance judging through a chat-completion provider.

One prompt per (process, paragraph), built from three blocks: the task
instruction, the business block (context plus all level descriptions), and
the regulation block (one paragraph plus document context). Only the first
reply counts; a transport retry re-sends the same request but a reply is
never regenerated for semantic reasons. Replies are requested in a fixed
JSON schema so parsing is testable, and the raw reply text is preserved
verbatim for audit.
"""

from __future__ import annotations

import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

from regrel.corpus import Paragraph, RegulatoryDocument, StudySet, write_jsonl
from regrel.labels import LabelError, LabelSet, RelevanceType, close_labels, closure_violations
from regrel.process import ProcessModel

log = logging.getLogger(__name__)

ITERATIONS = ("v1", "v2", "v3")

WORD_BUDGET = (1500, 2300)

REPLY_SCHEMA_LINE = (
    'Answer with a single JSON object and nothing else, shaped exactly like this: '
    '{"level1": "irrelevant|informative|compliance", '
    '"level2": {"<sub_process_id>": "irrelevant|informative|compliance"}, '
    '"level3": {"<task_or_event_id>": "irrelevant|informative|compliance"}, '
    '"justification": "<your reasoning>"}. '
    "List only sub-processes and tasks that are informative or compliance relevant; "
    "anything you omit counts as irrelevant."
)

CLEAR_RELATIONS_LINE = (
    "Only match clear relations between the regulatory text and the business process; "
    "if the connection is vague or merely topical, treat it as irrelevant."
)

RECALL_PRIORITY_LINE = (
    "Recall is the most important measurement for this task: missing a relevant "
    "paragraph is worse than including an irrelevant one."
)


class ParseError(ValueError):
    """Reply that cannot be turned into a judgment; carries the raw reply."""

    def __init__(self, message: str, raw_reply: str):
        super().__init__(message)
        self.raw_reply = raw_reply


class ScriptedChatProvider:
    """Replays a fixed sequence of replies in request order. Useful for
    offline reruns and tests; counts requests. Safe under concurrent calls."""

    def __init__(self, replies: list[str]):
        self._replies = list(replies)
        self._lock = threading.Lock()
        self.requests = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedChatProvider":
        replies = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    replies.append(obj["content"] if isinstance(obj, dict) else json.dumps(obj))
        return cls(replies)

    def chat(self, messages: list[dict], temperature: float = 0.0) -> str:
        with self._lock:
            if self.requests >= len(self._replies):
                raise RuntimeError(f"scripted provider exhausted after {self.requests} replies")
            reply = self._replies[self.requests]
            self.requests += 1
            return reply


class ChatProvider(Protocol):
    def chat(self, messages: list[dict], temperature: float = 0.0) -> str: ...


@dataclass(frozen=True)
class JudgeConfig:
    iteration: str = "v3"
    temperature: float = 0.0
    closure_mode: str = "lenient"  # "lenient" auto-closes, "strict" rejects
    subprocess_spread_threshold: int | None = None  # optional post-filter, off by default

    def __post_init__(self):
        if self.iteration not in ITERATIONS:
            raise ValueError(f"iteration must be one of {ITERATIONS}")
        if self.closure_mode not in ("lenient", "strict"):
            raise ValueError("closure_mode must be 'lenient' or 'strict'")


@dataclass
class PromptBundle:
    task_description: str
    business_block: str
    regulation_block: str
    iteration: str
    rendered: str
    para_id: str
    word_count: int
    model: ProcessModel = field(repr=False)


@dataclass
class LlmJudgment:
    para_id: str
    level1: RelevanceType
    level2: dict[str, RelevanceType]
    level3: dict[str, RelevanceType]
    justification: str
    raw_reply: str

    @property
    def labels(self) -> LabelSet:
        return LabelSet(self.level1, dict(self.level2), dict(self.level3))

    def to_reply_json(self) -> dict:
        """The judgment in the reply schema the prompt requests."""
        return {
            "level1": self.level1.value,
            "level2": {n: t.value for n, t in self.level2.items()},
            "level3": {n: t.value for n, t in self.level3.items()},
            "justification": self.justification,
        }

    def to_json(self) -> dict:
        return {"para_id": self.para_id, **self.to_reply_json(), "raw_reply": self.raw_reply}


# --- prompt construction --------------------------------------------------------


def _task_block(iteration: str) -> str:
    lines = [
        "You are assessing whether one paragraph of regulatory text is relevant "
        "to a business process.",
        "Decide three things:",
        "1. Process relevance (level1): is the paragraph relevant to the process as a whole? "
        "Use \"compliance\" when the text describes an action the organization must fulfil "
        "to be compliant, \"informative\" when the text relates to the process but requires "
        "no clear action by the organization, and \"irrelevant\" otherwise.",
        "2. Sub-process relevance (level2): for each relevant sub-process, give its id and type.",
        "3. Task relevance (level3): for each relevant task or throwing event, give its id and type.",
        "If a task is relevant, its sub-process and the process are also relevant.",
    ]
    if iteration in ("v2", "v3"):
        lines.append(CLEAR_RELATIONS_LINE)
    if iteration == "v3":
        lines.append(RECALL_PRIORITY_LINE)
    lines.append(REPLY_SCHEMA_LINE)
    return "\n".join(lines)


def _business_block(model: ProcessModel) -> str:
    ctx = model.context
    parts = [
        f"Business context: located in {ctx.location}; domain: {ctx.domain}; size: {ctx.size}.",
        f"Process ({model.root.node_id}) {model.root.name}: {model.root.description}",
    ]
    for sub in model.nodes_at(2):
        parts.append(f"Sub-process ({sub.node_id}) {sub.name}: {sub.description}")
        for task in model.nodes_at(3):
            if task.parent_id == sub.node_id:
                label = "Task" if task.kind == "task" else "Throwing event"
                parts.append(f"  {label} ({task.node_id}) {task.name}: {task.description}")
    return "\n".join(parts)


def _regulation_block(para: Paragraph, doc: RegulatoryDocument, iteration: str) -> str:
    parts = [
        f"Regulatory document: {doc.title}",
        f"Section: {para.section_title}" + (f" / {para.subsection}" if para.subsection else ""),
    ]
    if iteration in ("v2", "v3"):
        parts.append(
            f"Document content and applicability: origin {doc.origin}; "
            f"jurisdiction {doc.jurisdiction or 'unspecified'}; "
            f"applies to {doc.applicable_domain or 'unspecified'}."
        )
    parts.append(f"Paragraph:\n{para.body}")
    return "\n".join(parts)


def build_prompt(
    model: ProcessModel,
    para: Paragraph,
    doc: RegulatoryDocument,
    iteration: str = "v3",
) -> PromptBundle:
    """Assemble the three prompt blocks for one paragraph.

    The task block is identical for every run, the business block is
    identical per process, and only the regulation block changes per
    paragraph. Requires a complete model (every description filled in).
    """
    if iteration not in ITERATIONS:
        raise ValueError(f"iteration must be one of {ITERATIONS}")
    empty = model.incomplete_nodes()
    if empty or not model.complete:
        raise ValueError(f"model is incomplete; empty descriptions on nodes: {empty}")
    task = _task_block(iteration)
    business = _business_block(model)
    regulation = _regulation_block(para, doc, iteration)
    rendered = "\n\n".join(["# Task\n" + task, "# Business process\n" + business,
                            "# Regulatory text\n" + regulation])
    word_count = len(rendered.split())
    if iteration == "v3" and not WORD_BUDGET[0] <= word_count <= WORD_BUDGET[1]:
        log.warning(
            "prompt for %s is %d words, outside the expected %d-%d range",
            para.para_id, word_count, WORD_BUDGET[0], WORD_BUDGET[1],
        )
    return PromptBundle(
        task_description=task,
        business_block=business,
        regulation_block=regulation,
        iteration=iteration,
        rendered=rendered,
        para_id=para.para_id,
        word_count=word_count,
        model=model,
    )


# --- reply parsing ----------------------------------------------------------------

_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n(.*?)\n```\s*$", re.DOTALL)


def _extract_json(raw: str) -> dict:
    text = raw.strip()
    fence = _FENCE_RE.match(text)
    if fence:
        text = fence.group(1).strip()
    for candidate in (text, text[text.find("{"): text.rfind("}") + 1]):
        if not candidate:
            continue
        try:
            obj = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
        raise ParseError(f"reply is valid JSON but not an object: {type(obj).__name__}", raw)
    raise ParseError("reply contains no JSON object", raw)


def _parse_level_map(obj, level: int, valid_ids: set[str], raw: str) -> dict[str, RelevanceType]:
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise ParseError(f"level{level} must be an object", raw)
    out = {}
    for node_id, value in obj.items():
        if node_id not in valid_ids:
            raise ParseError(f"unknown level-{level} node id in reply: {node_id}", raw)
        try:
            out[node_id] = RelevanceType.parse(str(value))
        except LabelError as exc:
            raise ParseError(str(exc), raw) from exc
    return out


def parse_reply(raw: str, bundle: PromptBundle, closure_mode: str = "lenient") -> LlmJudgment:
    """Parse a reply into a judgment, validating node ids and propagation.

    Lenient mode auto-closes propagation violations upward with a warning;
    strict mode rejects them. Nodes missing from the reply are irrelevant.
    """
    obj = _extract_json(raw)
    if "level1" not in obj:
        raise ParseError("reply is missing 'level1'", raw)
    try:
        level1 = RelevanceType.parse(str(obj["level1"]))
    except LabelError as exc:
        raise ParseError(str(exc), raw) from exc
    model = bundle.model
    level2 = _parse_level_map(obj.get("level2"), 2, model.node_ids_at(2), raw)
    level3 = _parse_level_map(obj.get("level3"), 3, model.node_ids_at(3), raw)
    justification = str(obj.get("justification", ""))

    labels = LabelSet(level1, level2, level3)
    problems = closure_violations(labels, model.parent_map())
    if problems:
        if closure_mode == "strict":
            raise ParseError("propagation violation: " + "; ".join(problems), raw)
        log.warning("auto-closing reply for %s: %s", bundle.para_id, "; ".join(problems))
        labels = close_labels(labels, model.parent_map())

    return LlmJudgment(
        para_id=bundle.para_id,
        level1=labels.level1,
        level2=labels.level2,
        level3=labels.level3,
        justification=justification,
        raw_reply=raw,
    )


def judge(provider: ChatProvider, bundle: PromptBundle,
          config: JudgeConfig | None = None) -> LlmJudgment:
    """Send exactly one completion request for the bundle and parse the reply.

    The temperature is pinned from the config (default 0). Transport failures
    surface as typed errors from the provider; re-enqueueing is the caller's
    call and re-sends the same prompt, never a regeneration of a received
    reply.
    """
    config = config or JudgeConfig()
    raw = provider.chat(
        messages=[{"role": "user", "content": bundle.rendered}],
        temperature=config.temperature,
    )
    return parse_reply(raw, bundle, closure_mode=config.closure_mode)


def apply_subprocess_spread_filter(
    judgment: LlmJudgment, threshold: int = 3
) -> LlmJudgment:
    """Optional post-filter: a paragraph judged relevant for `threshold` or
    more sub-processes is reclassified as process-irrelevant (the spread
    signals a business-wide rather than process-specific text)."""
    spread = sum(1 for t in judgment.level2.values() if t.relevant)
    if spread < threshold:
        return judgment
    log.info("post-filter: %s relevant for %d sub-processes; set irrelevant",
             judgment.para_id, spread)
    return LlmJudgment(
        para_id=judgment.para_id,
        level1=RelevanceType.IRRELEVANT,
        level2={},
        level3={},
        justification=judgment.justification,
        raw_reply=judgment.raw_reply,
    )


def judge_study_set(
    provider: ChatProvider,
    model: ProcessModel,
    study_set: StudySet,
    config: JudgeConfig | None = None,
    max_in_flight: int = 1,
) -> list[LlmJudgment]:
    """Judge every paragraph of a study set: one request per paragraph.

    Results are keyed by para_id and returned in study-set order regardless
    of completion order; `max_in_flight` bounds provider concurrency.
    """
    config = config or JudgeConfig()
    bundles = []
    for para in study_set.paragraphs:
        doc = study_set.documents.get(para.doc_id)
        if doc is None:
            doc = RegulatoryDocument(para.doc_id, para.doc_id, "external", "", "")
        bundles.append(build_prompt(model, para, doc, config.iteration))

    def run(bundle: PromptBundle) -> LlmJudgment:
        judgment = judge(provider, bundle, config)
        if config.subprocess_spread_threshold is not None:
            judgment = apply_subprocess_spread_filter(
                judgment, config.subprocess_spread_threshold
            )
        return judgment

    if max_in_flight <= 1:
        return [run(b) for b in bundles]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(run, bundles))


def write_judgments(path: str | Path, judgments: Iterable[LlmJudgment]) -> None:
    write_jsonl(path, (j.to_json() for j in judgments))


def judgments_to_predictions(judgments: Iterable[LlmJudgment]) -> dict[str, LabelSet]:
    return {j.para_id: j.labels for j in judgments}
