"""Relevance label primitives shared by judging, aggregation, and evaluation.

A label set for one paragraph carries one type per process level: a single
level-1 type plus per-node maps for levels 2 and 3. Missing node entries are
implicitly irrelevant. Relevance propagates upward: a relevant task makes its
sub-process relevant, and a relevant sub-process makes the process relevant.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class RelevanceType(enum.Enum):
    IRRELEVANT = "irrelevant"
    INFORMATIVE = "informative"
    COMPLIANCE = "compliance"

    @property
    def strength(self) -> int:
        return _STRENGTH[self]

    @property
    def relevant(self) -> bool:
        return self is not RelevanceType.IRRELEVANT

    @classmethod
    def parse(cls, value: str) -> "RelevanceType":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise LabelError(f"unknown relevance type: {value!r}") from None


_STRENGTH = {
    RelevanceType.IRRELEVANT: 0,
    RelevanceType.INFORMATIVE: 1,
    RelevanceType.COMPLIANCE: 2,
}


class LabelError(ValueError):
    """Malformed or inconsistent relevance labels."""


def stronger(a: RelevanceType, b: RelevanceType) -> RelevanceType:
    return a if a.strength >= b.strength else b


@dataclass
class LabelSet:
    """Relevance labels for one paragraph across all three process levels."""

    level1: RelevanceType = RelevanceType.IRRELEVANT
    level2: dict[str, RelevanceType] = field(default_factory=dict)
    level3: dict[str, RelevanceType] = field(default_factory=dict)

    def copy(self) -> "LabelSet":
        return LabelSet(self.level1, dict(self.level2), dict(self.level3))

    def relevant_at(self, level: int, node_id: str | None = None) -> bool:
        if level == 1:
            return self.level1.relevant
        table = self.level2 if level == 2 else self.level3
        if node_id is None:
            return any(t.relevant for t in table.values())
        return table.get(node_id, RelevanceType.IRRELEVANT).relevant

    def to_json(self) -> dict:
        return {
            "level1": self.level1.value,
            "level2": {n: t.value for n, t in self.level2.items()},
            "level3": {n: t.value for n, t in self.level3.items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LabelSet":
        return cls(
            level1=RelevanceType.parse(obj.get("level1", "irrelevant")),
            level2={n: RelevanceType.parse(t) for n, t in (obj.get("level2") or {}).items()},
            level3={n: RelevanceType.parse(t) for n, t in (obj.get("level3") or {}).items()},
        )


def close_labels(labels: LabelSet, parent_of: dict[str, str]) -> LabelSet:
    """Lift relevance to ancestors: each non-irrelevant level-3 entry raises its
    level-2 parent to at least its own type, and any non-irrelevant level-2
    entry raises level 1. Idempotent and monotone; never weakens a label.

    ``parent_of`` maps level-3 node ids to their level-2 parent ids.
    """
    closed = labels.copy()
    for node_id, label in labels.level3.items():
        if not label.relevant:
            continue
        parent = parent_of.get(node_id)
        if parent is None:
            raise LabelError(f"level-3 node {node_id!r} has no known level-2 parent")
        current = closed.level2.get(parent, RelevanceType.IRRELEVANT)
        closed.level2[parent] = stronger(current, label)
    for label in closed.level2.values():
        if label.relevant:
            closed.level1 = stronger(closed.level1, label)
    return closed


def closure_violations(labels: LabelSet, parent_of: dict[str, str]) -> list[str]:
    """Human-readable descriptions of propagation violations, empty when closed."""
    problems = []
    for node_id, label in labels.level3.items():
        if not label.relevant:
            continue
        parent = parent_of.get(node_id)
        if parent is None:
            problems.append(f"level-3 node {node_id} has no level-2 parent")
            continue
        if not labels.level2.get(parent, RelevanceType.IRRELEVANT).relevant:
            problems.append(
                f"level-3 node {node_id} is {label.value} but parent {parent} is irrelevant"
            )
    if any(t.relevant for t in labels.level2.values()) and not labels.level1.relevant:
        problems.append("a level-2 node is relevant but level 1 is irrelevant")
    return problems
