"""Two-phase crowd submissions: quality checks and aggregation.

Phase 1 asks whether a paragraph is relevant to the process and, if so, to
which sub-processes; phase 2 (published only for paragraphs the phase-1
aggregate judged relevant) asks for the affected tasks/throwing events and
the relevance type per node. Three quality checks gate submissions: two
initial test questions, an attention option that must never be clicked, and
a semantic-dependency rule over the selected options.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from regrel.labels import LabelSet, RelevanceType, close_labels, stronger
from regrel.process import ProcessModel

log = logging.getLogger(__name__)

STRATEGIES = ("unfiltered", "qlt_filter", "qlt_comb")

NOT_RELEVANT_OPTION = "Not relevant"
TARGET_WORKERS = 3


class AggregationError(ValueError):
    pass


@dataclass(frozen=True)
class Phase1Answer:
    process_relevant: bool
    subprocess_ids: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Phase2Answer:
    node_types: dict[str, RelevanceType] = field(default_factory=dict)

    @property
    def node_ids(self) -> frozenset[str]:
        return frozenset(self.node_types)


@dataclass(frozen=True)
class WorkerSubmission:
    worker_id: str
    para_id: str
    phase: str  # "phase1" | "phase2"
    justification: str = ""
    test_question_answers: tuple[bool, bool] = (True, True)
    clicked_forbidden_option: bool = False
    selected_options: frozenset[str] = frozenset()
    phase1_answer: Phase1Answer | None = None
    phase2_answer: Phase2Answer | None = None
    received_at: str = ""  # ISO timestamp; ties broken by worker_id

    def __post_init__(self):
        if self.phase not in ("phase1", "phase2"):
            raise ValueError(f"unknown phase: {self.phase!r}")
        if (self.phase == "phase1") != (self.phase1_answer is not None):
            raise ValueError("phase1_answer must be present iff phase is phase1")
        if (self.phase == "phase2") != (self.phase2_answer is not None):
            raise ValueError("phase2_answer must be present iff phase is phase2")

    def to_json(self) -> dict:
        obj = {
            "worker_id": self.worker_id,
            "para_id": self.para_id,
            "phase": self.phase,
            "justification": self.justification,
            "test_question_answers": list(self.test_question_answers),
            "clicked_forbidden_option": self.clicked_forbidden_option,
            "selected_options": sorted(self.selected_options),
            "received_at": self.received_at,
        }
        if self.phase1_answer is not None:
            obj["phase1_answer"] = {
                "process_relevant": self.phase1_answer.process_relevant,
                "subprocess_ids": sorted(self.phase1_answer.subprocess_ids),
            }
        if self.phase2_answer is not None:
            obj["phase2_answer"] = {
                "node_types": {n: t.value for n, t in self.phase2_answer.node_types.items()}
            }
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "WorkerSubmission":
        p1 = obj.get("phase1_answer")
        p2 = obj.get("phase2_answer")
        return cls(
            worker_id=obj["worker_id"],
            para_id=obj["para_id"],
            phase=obj["phase"],
            justification=obj.get("justification", ""),
            test_question_answers=tuple(obj.get("test_question_answers", [True, True])),
            clicked_forbidden_option=obj.get("clicked_forbidden_option", False),
            selected_options=frozenset(obj.get("selected_options", [])),
            phase1_answer=Phase1Answer(
                process_relevant=p1["process_relevant"],
                subprocess_ids=frozenset(p1.get("subprocess_ids", [])),
            )
            if p1
            else None,
            phase2_answer=Phase2Answer(
                node_types={
                    n: RelevanceType.parse(t) for n, t in p2.get("node_types", {}).items()
                }
            )
            if p2
            else None,
            received_at=obj.get("received_at", ""),
        )


# --- quality checks ---------------------------------------------------------------


@dataclass(frozen=True)
class QualityConfig:
    not_relevant_option: str = NOT_RELEVANT_OPTION
    attention_option: str = "Do not click on this option at any time"


@dataclass(frozen=True)
class VoteConfig:
    """Vote rule for the unfiltered strategy. "majority" resolves ties toward
    relevance; "proportion" requires at least `proportion_threshold` of the
    workers to have selected the item."""

    rule: str = "majority"
    proportion_threshold: float = 0.5

    def __post_init__(self):
        if self.rule not in ("majority", "proportion"):
            raise ValueError("rule must be 'majority' or 'proportion'")
        if not 0.0 < self.proportion_threshold <= 1.0:
            raise ValueError("proportion_threshold must be in (0, 1]")


@dataclass(frozen=True)
class QualityFlags:
    passed_test_questions: bool
    passed_attention: bool
    passed_semantic_dependency: bool

    @property
    def passed_all(self) -> bool:
        return (
            self.passed_test_questions
            and self.passed_attention
            and self.passed_semantic_dependency
        )


def check_quality(sub: WorkerSubmission, config: QualityConfig | None = None) -> QualityFlags:
    """Apply the three quality checks to one submission.

    The semantic-dependency check fails when the selected options combine
    "Not relevant" with any option indicating relevance (the attention option
    itself does not count as a relevance label).
    """
    config = config or QualityConfig()
    relevance_labels = sub.selected_options - {config.not_relevant_option, config.attention_option}
    contradictory = config.not_relevant_option in sub.selected_options and bool(relevance_labels)
    return QualityFlags(
        passed_test_questions=all(sub.test_question_answers),
        passed_attention=not sub.clicked_forbidden_option,
        passed_semantic_dependency=not contradictory,
    )


# --- aggregation -------------------------------------------------------------------


@dataclass
class AggregateResult:
    para_id: str
    phase: str
    strategy: str
    status: str  # "ok" | "no_qualified_data"
    worker_count: int
    passing_count: int
    process_relevant: bool | None = None  # phase 1
    subprocess_ids: frozenset[str] = frozenset()  # phase 1
    node_types: dict[str, RelevanceType] = field(default_factory=dict)  # phase 2

    @property
    def under_target(self) -> bool:
        return self.worker_count < TARGET_WORKERS


def _ordered(subs: list[WorkerSubmission]) -> list[WorkerSubmission]:
    return sorted(subs, key=lambda s: (s.received_at, s.worker_id))


def _vote(relevant_votes: int, total_votes: int, config: VoteConfig) -> bool:
    if config.rule == "proportion":
        return relevant_votes >= config.proportion_threshold * total_votes
    # majority with ties resolved toward relevance (recall-favoring)
    return relevant_votes * 2 >= total_votes


def _majority_type(types: list[RelevanceType]) -> RelevanceType:
    compliance = sum(1 for t in types if t is RelevanceType.COMPLIANCE)
    informative = len(types) - compliance
    return RelevanceType.COMPLIANCE if compliance >= informative else RelevanceType.INFORMATIVE


def _combine(subs: list[WorkerSubmission], union: bool, votes: VoteConfig) -> AggregateResult:
    """union=True: relevant iff any worker said relevant (qlt_comb).
    union=False: per-item vote over all workers (unfiltered)."""
    first = subs[0]
    n = len(subs)
    result = AggregateResult(
        para_id=first.para_id,
        phase=first.phase,
        strategy="",
        status="ok",
        worker_count=n,
        passing_count=n,
    )
    if first.phase == "phase1":
        answers = [s.phase1_answer for s in subs]
        rel_votes = sum(1 for a in answers if a.process_relevant)
        result.process_relevant = rel_votes > 0 if union else _vote(rel_votes, n, votes)
        all_subs = {sid for a in answers for sid in a.subprocess_ids}
        if union:
            result.subprocess_ids = frozenset(all_subs)
        else:
            result.subprocess_ids = frozenset(
                sid
                for sid in all_subs
                if _vote(sum(1 for a in answers if sid in a.subprocess_ids), n, votes)
            )
        if not result.process_relevant:
            result.subprocess_ids = frozenset()
    else:
        answers = [s.phase2_answer for s in subs]
        all_nodes = {nid for a in answers for nid in a.node_ids}
        for nid in sorted(all_nodes):
            types = [a.node_types[nid] for a in answers if nid in a.node_types]
            if union:
                merged = types[0]
                for t in types[1:]:
                    merged = stronger(merged, t)  # conflicts resolve to compliance
                result.node_types[nid] = merged
            elif _vote(len(types), n, votes):
                result.node_types[nid] = _majority_type(types)
    return result


def aggregate(
    subs: Iterable[WorkerSubmission],
    strategy: str,
    model: ProcessModel | None = None,
    quality: QualityConfig | None = None,
    votes: VoteConfig | None = None,
) -> AggregateResult:
    """Aggregate the submissions for one (paragraph, phase) under a strategy.

    unfiltered: vote over all workers (default: majority, ties toward
        relevance; a proportion-threshold rule is selectable via `votes`).
    qlt_filter: the chronologically first submission that passed the quality
        checks, taken verbatim.
    qlt_comb:   union over passing workers; a node is relevant iff any passing
        worker labeled it relevant, and type conflicts resolve to compliance.

    Fewer than three workers is allowed with a warning; zero passing workers
    under the qlt strategies yields a "no_qualified_data" result, which is an
    explicitly different outcome from a negative label.
    """
    if strategy not in STRATEGIES:
        raise AggregationError(f"unknown strategy: {strategy!r}")
    votes = votes or VoteConfig()
    subs = _ordered(list(subs))
    if not subs:
        raise AggregationError("no submissions to aggregate")
    para_ids = {s.para_id for s in subs}
    phases = {s.phase for s in subs}
    if len(para_ids) > 1 or len(phases) > 1:
        raise AggregationError(
            f"submissions must share one paragraph and phase, got {para_ids} / {phases}"
        )
    if len(subs) < TARGET_WORKERS:
        log.warning(
            "paragraph %s %s: %d worker(s), target is %d",
            subs[0].para_id, subs[0].phase, len(subs), TARGET_WORKERS,
        )

    if model is not None:
        subs = [_restrict_to_model(s, model) for s in subs]

    if strategy == "unfiltered":
        result = _combine(subs, union=False, votes=votes)
        result.strategy = strategy
        return result

    passing = [s for s in subs if check_quality(s, quality).passed_all]
    if not passing:
        return AggregateResult(
            para_id=subs[0].para_id,
            phase=subs[0].phase,
            strategy=strategy,
            status="no_qualified_data",
            worker_count=len(subs),
            passing_count=0,
        )
    chosen = [passing[0]] if strategy == "qlt_filter" else passing
    result = _combine(chosen, union=(strategy == "qlt_comb"), votes=votes)
    result.strategy = strategy
    result.worker_count = len(subs)
    result.passing_count = len(passing)
    return result


def _restrict_to_model(sub: WorkerSubmission, model: ProcessModel) -> WorkerSubmission:
    """Drop selections referencing nodes absent from the model (logged)."""
    if sub.phase == "phase1":
        known = model.node_ids_at(2)
        unknown = sub.phase1_answer.subprocess_ids - known
        if not unknown:
            return sub
        log.warning("worker %s selected unknown sub-processes %s", sub.worker_id, sorted(unknown))
        answer = Phase1Answer(
            sub.phase1_answer.process_relevant, sub.phase1_answer.subprocess_ids & known
        )
        return WorkerSubmission(
            worker_id=sub.worker_id, para_id=sub.para_id, phase=sub.phase,
            justification=sub.justification,
            test_question_answers=sub.test_question_answers,
            clicked_forbidden_option=sub.clicked_forbidden_option,
            selected_options=sub.selected_options, phase1_answer=answer,
            received_at=sub.received_at,
        )
    known = model.node_ids_at(3)
    unknown = sub.phase2_answer.node_ids - known
    if not unknown:
        return sub
    log.warning("worker %s selected unknown nodes %s", sub.worker_id, sorted(unknown))
    answer = Phase2Answer({n: t for n, t in sub.phase2_answer.node_types.items() if n in known})
    return WorkerSubmission(
        worker_id=sub.worker_id, para_id=sub.para_id, phase=sub.phase,
        justification=sub.justification,
        test_question_answers=sub.test_question_answers,
        clicked_forbidden_option=sub.clicked_forbidden_option,
        selected_options=sub.selected_options, phase2_answer=answer,
        received_at=sub.received_at,
    )


# --- study-level aggregation --------------------------------------------------------


def aggregate_study(
    submissions: Iterable[WorkerSubmission],
    strategy: str,
    model: ProcessModel,
    untyped_relevance: RelevanceType = RelevanceType.INFORMATIVE,
) -> dict[str, LabelSet]:
    """Aggregate a whole submission file into per-paragraph predictions.

    Phase gating: phase-2 submissions only count for paragraphs whose phase-1
    aggregate is relevant. Phase 1 carries no relevance type, so relevant
    paragraphs/sub-processes default to `untyped_relevance` and closure lifts
    stronger types from phase-2 nodes.
    """
    by_para: dict[str, dict[str, list[WorkerSubmission]]] = {}
    for sub in submissions:
        by_para.setdefault(sub.para_id, {}).setdefault(sub.phase, []).append(sub)

    predictions: dict[str, LabelSet] = {}
    for para_id in sorted(by_para):
        phases = by_para[para_id]
        labels = LabelSet()
        phase1 = phases.get("phase1")
        if phase1:
            agg1 = aggregate(phase1, strategy, model=model)
            if agg1.status == "no_qualified_data":
                log.warning("paragraph %s: no qualified phase-1 data", para_id)
                predictions[para_id] = labels
                continue
            if agg1.process_relevant:
                labels.level1 = untyped_relevance
                for sid in agg1.subprocess_ids:
                    labels.level2[sid] = untyped_relevance
                phase2 = phases.get("phase2")
                if phase2:
                    agg2 = aggregate(phase2, strategy, model=model)
                    if agg2.status == "ok":
                        labels.level3 = dict(agg2.node_types)
            elif phases.get("phase2"):
                log.warning(
                    "paragraph %s: phase-2 submissions ignored (phase-1 aggregate irrelevant)",
                    para_id,
                )
        predictions[para_id] = close_labels(labels, model.parent_map())
    return predictions


def read_submissions(path: str | Path) -> list[WorkerSubmission]:
    subs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                subs.append(WorkerSubmission.from_json(json.loads(line)))
    return subs


def write_submissions(path: str | Path, subs: Iterable[WorkerSubmission]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for sub in subs:
            fh.write(json.dumps(sub.to_json(), ensure_ascii=False) + "\n")
