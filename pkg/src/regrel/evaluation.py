"""Gold standard storage, level-wise metrics, and the scenario recommender.

Standard confusion-matrix definitions are used throughout: TP counts
gold-relevant units predicted relevant, FP gold-irrelevant predicted
relevant, TN gold-irrelevant predicted irrelevant, FN gold-relevant
predicted irrelevant. Relevance is binary for counting (informative and
compliance both count as relevant); type agreement is scored separately.
Precision and recall are reported as None (null in JSON) when undefined,
which keeps "no predictions" distinguishable from "all predictions wrong".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from regrel.corpus import read_jsonl, write_jsonl
from regrel.labels import LabelError, LabelSet, close_labels, closure_violations
from regrel.process import ProcessModel


class GoldValidationError(ValueError):
    """Gold labels violating propagation closure or group consistency."""


class CoverageError(ValueError):
    """Predictions and gold do not cover the same study set."""


# --- gold standard ------------------------------------------------------------


@dataclass
class GoldStandard:
    use_case_id: str
    labels: dict[str, LabelSet]
    provenance: dict[str, str] = field(default_factory=dict)

    def relevant_count(self, level: int, node_id: str | None = None) -> int:
        return sum(1 for l in self.labels.values() if l.relevant_at(level, node_id))

    def to_records(self) -> list[dict]:
        records = []
        for para_id in self.labels:
            obj = {"para_id": para_id, **self.labels[para_id].to_json()}
            if para_id in self.provenance:
                obj["provenance"] = self.provenance[para_id]
            records.append(obj)
        return records


def validate_gold(
    gold: GoldStandard,
    model: ProcessModel | None = None,
    groups: dict[str, str] | None = None,
) -> None:
    """Reject gold that violates propagation closure, references unknown
    nodes, or contradicts the paragraph groups (group A must be level-1
    relevant, groups B and C must not)."""
    parent_of = model.parent_map() if model else None
    for para_id, labels in gold.labels.items():
        if model is not None:
            l2_ids, l3_ids = model.node_ids_at(2), model.node_ids_at(3)
            for node_id in labels.level2:
                if node_id not in l2_ids:
                    raise GoldValidationError(f"{para_id}: unknown level-2 node {node_id}")
            for node_id in labels.level3:
                if node_id not in l3_ids:
                    raise GoldValidationError(f"{para_id}: unknown level-3 node {node_id}")
        if parent_of is not None:
            problems = closure_violations(labels, parent_of)
        else:
            # without a model, check the level-2 -> level-1 leg only
            problems = []
            if any(t.relevant for t in labels.level2.values()) and not labels.level1.relevant:
                problems.append("a level-2 node is relevant but level 1 is irrelevant")
        if problems:
            raise GoldValidationError(f"{para_id}: " + "; ".join(problems))
    if groups:
        for para_id, labels in gold.labels.items():
            group = groups.get(para_id)
            if group == "A" and not labels.level1.relevant:
                raise GoldValidationError(f"{para_id}: group A paragraph labeled irrelevant")
            if group in ("B", "C") and labels.level1.relevant:
                raise GoldValidationError(
                    f"{para_id}: group {group} paragraph labeled {labels.level1.value}"
                )


def load_gold(
    path: str | Path,
    use_case_id: str | None = None,
    model: ProcessModel | None = None,
    groups: dict[str, str] | None = None,
) -> GoldStandard:
    labels: dict[str, LabelSet] = {}
    provenance: dict[str, str] = {}
    for obj in read_jsonl(path):
        para_id = obj["para_id"]
        if para_id in labels:
            raise GoldValidationError(f"duplicate gold entry for {para_id}")
        labels[para_id] = LabelSet.from_json(obj)
        if obj.get("provenance"):
            provenance[para_id] = obj["provenance"]
    gold = GoldStandard(use_case_id or Path(path).stem, labels, provenance)
    validate_gold(gold, model=model, groups=groups)
    return gold


def save_gold(gold: GoldStandard, path: str | Path) -> None:
    write_jsonl(path, gold.to_records())


# --- predictions ---------------------------------------------------------------


def load_predictions(path: str | Path) -> dict[str, LabelSet]:
    preds: dict[str, LabelSet] = {}
    for obj in read_jsonl(path):
        preds[obj["para_id"]] = LabelSet.from_json(obj)
    return preds


def save_predictions(
    preds: dict[str, LabelSet], path: str | Path, method: str = "", config_digest: str = ""
) -> None:
    records = []
    for para_id, labels in preds.items():
        obj = {"para_id": para_id, **labels.to_json()}
        if method:
            obj["method"] = method
        if config_digest:
            obj["config_digest"] = config_digest
        records.append(obj)
    write_jsonl(path, records)


def normalize_predictions(
    preds: dict[str, LabelSet], model: ProcessModel
) -> dict[str, LabelSet]:
    """Close predictions upward: a relevant child lifts its ancestors to at
    least the strongest child type (compliance > informative). Idempotent and
    monotone. Unknown node ids are an error."""
    parent_of = model.parent_map()
    l2_ids, l3_ids = model.node_ids_at(2), model.node_ids_at(3)
    closed = {}
    for para_id, labels in preds.items():
        for node_id in labels.level2:
            if node_id not in l2_ids:
                raise LabelError(f"{para_id}: unknown level-2 node {node_id}")
        for node_id in labels.level3:
            if node_id not in l3_ids:
                raise LabelError(f"{para_id}: unknown level-3 node {node_id}")
        closed[para_id] = close_labels(labels, parent_of)
    return closed


# --- confusion counts and metrics ----------------------------------------------


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def precision(self) -> float | None:
        denom = self.tp + self.fp
        return self.tp / denom if denom else None

    @property
    def recall(self) -> float | None:
        denom = self.tp + self.fn
        return self.tp / denom if denom else None

    def to_json(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def round2(value: float | None) -> float | None:
    """Half-up rounding to 2 decimals for display; raw values are kept in
    machine output."""
    if value is None:
        return None
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _check_coverage(preds: dict[str, LabelSet], gold: GoldStandard) -> None:
    missing = sorted(set(gold.labels) - set(preds))
    extra = sorted(set(preds) - set(gold.labels))
    if missing or extra:
        raise CoverageError(
            f"prediction/gold coverage mismatch; missing {missing[:10]}, extra {extra[:10]}"
        )


def confusion(
    preds: dict[str, LabelSet],
    gold: GoldStandard,
    level: int,
    model: ProcessModel | None = None,
    denominator: str = "restricted",
) -> ConfusionCounts:
    """Binary confusion counts at one level.

    The level-1 unit is a paragraph over the whole study set. At levels 2 and
    3 the unit is a (paragraph, node) pair; with the default "restricted"
    denominator, pairs are counted for paragraphs that are gold-relevant at
    level 1 plus any paragraph predicted relevant at the evaluated level,
    while "all_paragraphs" scores every pair.
    """
    if level not in (1, 2, 3):
        raise ValueError("level must be 1, 2, or 3")
    if denominator not in ("restricted", "all_paragraphs"):
        raise ValueError(f"unknown denominator mode: {denominator!r}")
    _check_coverage(preds, gold)
    tp = fp = tn = fn = 0
    if level == 1:
        for para_id, gold_labels in gold.labels.items():
            g = gold_labels.level1.relevant
            p = preds[para_id].level1.relevant
            tp += g and p
            fp += (not g) and p
            tn += (not g) and (not p)
            fn += g and (not p)
        return ConfusionCounts(tp, fp, tn, fn)

    if model is not None:
        node_ids = sorted(model.node_ids_at(level))
    else:
        seen: set[str] = set()
        for labels in list(gold.labels.values()) + list(preds.values()):
            seen |= set(labels.level2 if level == 2 else labels.level3)
        node_ids = sorted(seen)
    for para_id, gold_labels in gold.labels.items():
        pred_labels = preds[para_id]
        if denominator == "restricted":
            in_scope = gold_labels.level1.relevant or pred_labels.relevant_at(level)
            if not in_scope:
                continue
        for node_id in node_ids:
            g = gold_labels.relevant_at(level, node_id)
            p = pred_labels.relevant_at(level, node_id)
            tp += g and p
            fp += (not g) and p
            tn += (not g) and (not p)
            fn += g and (not p)
    return ConfusionCounts(tp, fp, tn, fn)


def group_accuracy(
    preds: dict[str, LabelSet], gold: GoldStandard, groups: dict[str, str]
) -> dict[str, float | None]:
    """Per-group fraction of paragraphs whose binary level-1 prediction
    matches gold; None for empty groups."""
    _check_coverage(preds, gold)
    totals: dict[str, int] = {"A": 0, "B": 0, "C": 0}
    correct: dict[str, int] = {"A": 0, "B": 0, "C": 0}
    for para_id, gold_labels in gold.labels.items():
        group = groups.get(para_id)
        if group not in totals:
            continue
        totals[group] += 1
        if preds[para_id].level1.relevant == gold_labels.level1.relevant:
            correct[group] += 1
    return {g: (correct[g] / totals[g] if totals[g] else None) for g in totals}


def type_accuracy(preds: dict[str, LabelSet], gold: GoldStandard) -> float | None:
    """Fraction of gold-relevant paragraphs (level 1) whose predicted type
    matches gold exactly; predicted-irrelevant counts as a mismatch. None
    when there are no gold-relevant paragraphs."""
    _check_coverage(preds, gold)
    relevant = [p for p, l in gold.labels.items() if l.level1.relevant]
    if not relevant:
        return None
    matches = sum(1 for p in relevant if preds[p].level1 == gold.labels[p].level1)
    return matches / len(relevant)


def _level_json(counts: ConfusionCounts) -> dict:
    return {
        "counts": counts.to_json(),
        "accuracy": counts.accuracy,
        "precision": counts.precision,
        "recall": counts.recall,
        "display": {
            "accuracy": round2(counts.accuracy),
            "precision": round2(counts.precision),
            "recall": round2(counts.recall),
        },
    }


@dataclass
class MetricsReport:
    levels: dict[int, ConfusionCounts]
    group_accuracy: dict[str, float | None]
    type_accuracy: float | None
    denominator: str = "restricted"
    # levels 2/3 under the other denominator mode, reported alongside
    alternative_levels: dict[int, ConfusionCounts] = field(default_factory=dict)
    alternative_denominator: str | None = None

    def to_json(self) -> dict:
        payload = {
            "denominator": self.denominator,
            "levels": {str(l): _level_json(c) for l, c in self.levels.items()},
            "group_accuracy": {
                g: {"raw": v, "display": round2(v)} for g, v in self.group_accuracy.items()
            },
            "type_accuracy": {"raw": self.type_accuracy, "display": round2(self.type_accuracy)},
        }
        if self.alternative_levels:
            payload["alternative_denominator"] = self.alternative_denominator
            payload["alternative_levels"] = {
                str(l): _level_json(c) for l, c in self.alternative_levels.items()
            }
        return payload


def evaluate(
    preds: dict[str, LabelSet],
    gold: GoldStandard,
    groups: dict[str, str] | None = None,
    model: ProcessModel | None = None,
    denominator: str = "restricted",
) -> MetricsReport:
    """Full report: level-wise metrics under the chosen denominator (with the
    other mode reported alongside for levels 2/3), per-group accuracy, and
    relevance-type accuracy."""
    levels = {
        level: confusion(preds, gold, level, model=model, denominator=denominator)
        for level in (1, 2, 3)
    }
    other = "all_paragraphs" if denominator == "restricted" else "restricted"
    alternative = {
        level: confusion(preds, gold, level, model=model, denominator=other)
        for level in (2, 3)
    }
    per_group = (
        group_accuracy(preds, gold, groups) if groups else {"A": None, "B": None, "C": None}
    )
    return MetricsReport(
        levels=levels,
        group_accuracy=per_group,
        type_accuracy=type_accuracy(preds, gold),
        denominator=denominator,
        alternative_levels=alternative,
        alternative_denominator=other,
    )


def save_report(report: MetricsReport, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")


# --- level-0 derivation ---------------------------------------------------------


def business_relevant(group: str) -> bool:
    """Level-0 relevance is derived, not judged: groups A and B are
    business-relevant, group C is not."""
    return group in ("A", "B")


# --- scenario recommender --------------------------------------------------------

EXPERT_ONLY = "expert_only"
SOTA_PLUS_EXPERT = "sota_nlp_lir_plus_expert"
GPT_PLUS_EXPERT = "gpt_plus_expert"
CROWD_PLUS_EXPERT = "crowd_plus_expert"

USAGE_VALUES = ("low", "high", "low_to_high")
BINARY_VALUES = ("low", "high")


@dataclass(frozen=True)
class ScenarioProfile:
    usage: str
    impact: str
    dynamics: str
    regulatory_input: str

    def __post_init__(self):
        if self.usage not in USAGE_VALUES:
            raise ValueError(f"usage must be one of {USAGE_VALUES}")
        for name in ("impact", "dynamics", "regulatory_input"):
            if getattr(self, name) not in BINARY_VALUES:
                raise ValueError(f"{name} must be one of {BINARY_VALUES}")


# canonical scenario rows: (usage, impact, dynamics, regulatory_input) -> combination
_SCENARIO_ROWS: list[tuple[ScenarioProfile, str]] = [
    (ScenarioProfile("low_to_high", "high", "low", "low"), EXPERT_ONLY),
    (ScenarioProfile("high", "high", "high", "high"), SOTA_PLUS_EXPERT),
    (ScenarioProfile("high", "low", "high", "high"), GPT_PLUS_EXPERT),
    (ScenarioProfile("low_to_high", "low", "low", "low"), CROWD_PLUS_EXPERT),
]


@dataclass(frozen=True)
class Recommendation:
    combination: str
    non_canonical: bool = False


def recommend_methods(profile: ScenarioProfile) -> Recommendation:
    """Exact lookup of the four canonical scenario rows; non-canonical
    profiles fall back to the nearest row under the documented priority
    (impact first, then dynamics, then regulatory input, then usage) and are
    flagged."""
    for row, combination in _SCENARIO_ROWS:
        if row == profile:
            return Recommendation(combination, non_canonical=False)

    def usage_compatible(row_usage: str) -> bool:
        return row_usage == profile.usage or row_usage == "low_to_high"

    best, best_key = None, None
    for row, combination in _SCENARIO_ROWS:
        key = (
            row.impact == profile.impact,
            row.dynamics == profile.dynamics,
            row.regulatory_input == profile.regulatory_input,
            usage_compatible(row.usage),
        )
        if best_key is None or key > best_key:
            best, best_key = combination, key
    return Recommendation(best, non_canonical=True)
