"""Append-only persistence for the review workflow.

All state changes are events in ``events.jsonl``; a snapshot file
accelerates reopening but replaying the log alone reproduces the same
state, which is the crash-safety contract. Commands are serialized through
one lock (single writer); reads see the latest committed state. Artifacts
(study sets, process models, run outputs) live as plain files under the
store directory in the same jsonl formats used everywhere else.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from regrel.corpus import StudySet, load_study_set
from regrel.evaluation import GoldStandard, validate_gold
from regrel.labels import LabelSet, RelevanceType, stronger
from regrel.process import ProcessModel, load_process

log = logging.getLogger(__name__)

PENDING = "pending"


class StoreError(RuntimeError):
    pass


class ConflictError(StoreError):
    """Double decision without an idempotency match; carries current state."""

    def __init__(self, message: str, current: dict):
        super().__init__(message)
        self.current = current


@dataclass
class ReviewItem:
    item_id: str
    para_id: str
    query_node_id: str
    level: int
    method: str
    run_id: str
    machine_score: float | None = None
    machine_label: str | None = None
    machine_justification: str | None = None
    status: str = PENDING
    expert_label: str | None = None
    decided_at: str | None = None
    reviewer: str | None = None

    def to_json(self) -> dict:
        return {
            "item_id": self.item_id,
            "para_id": self.para_id,
            "query_node_id": self.query_node_id,
            "level": self.level,
            "method": self.method,
            "run_id": self.run_id,
            "machine_score": self.machine_score,
            "machine_label": self.machine_label,
            "machine_justification": self.machine_justification,
            "status": self.status,
            "expert_label": self.expert_label,
            "decided_at": self.decided_at,
            "reviewer": self.reviewer,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ReviewItem":
        return cls(**obj)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


@dataclass
class RunRecord:
    run_id: str
    kind: str  # "rank" | "judge"
    params: dict
    status: str = "pending"  # pending | running | done | failed
    output_path: str | None = None
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "run_id": self.run_id,
            "kind": self.kind,
            "params": self.params,
            "status": self.status,
            "output_path": self.output_path,
            "error": self.error,
        }


@dataclass
class _State:
    items: dict[str, ReviewItem] = field(default_factory=dict)
    gold: dict[str, LabelSet] = field(default_factory=dict)
    gold_provenance: dict[str, str] = field(default_factory=dict)
    gold_flags: list[str] = field(default_factory=list)
    runs: dict[str, RunRecord] = field(default_factory=dict)
    idempotency: dict[str, dict] = field(default_factory=dict)
    audit: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "items": {k: v.to_json() for k, v in self.items.items()},
            "gold": {k: v.to_json() for k, v in self.gold.items()},
            "gold_provenance": dict(self.gold_provenance),
            "gold_flags": list(self.gold_flags),
            "runs": {k: v.to_json() for k, v in self.runs.items()},
            "idempotency": dict(self.idempotency),
            "audit": list(self.audit),
        }


class Store:
    """Event-sourced store for review items, gold labels, and run records."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._state = _State()
        self._seq = 0
        self._models: dict[str, ProcessModel] = {}
        self._sets: dict[str, StudySet] = {}
        self._load()

    # --- persistence ------------------------------------------------------

    @property
    def _events_path(self) -> Path:
        return self.root / "events.jsonl"

    @property
    def _snapshot_path(self) -> Path:
        return self.root / "snapshot.json"

    def _load(self) -> None:
        if self._snapshot_path.exists():
            snap = json.loads(self._snapshot_path.read_text(encoding="utf-8"))
            self._seq = snap["version"]
            self._state = self._state_from_json(snap["state"])
        if self._events_path.exists():
            with open(self._events_path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    event = json.loads(line)
                    if event["seq"] > self._seq:
                        self._apply(event)
                        self._seq = event["seq"]
        self._load_artifacts()

    @staticmethod
    def _state_from_json(obj: dict) -> "_State":
        state = _State()
        state.items = {k: ReviewItem.from_json(v) for k, v in obj.get("items", {}).items()}
        state.gold = {k: LabelSet.from_json(v) for k, v in obj.get("gold", {}).items()}
        state.gold_provenance = dict(obj.get("gold_provenance", {}))
        state.gold_flags = list(obj.get("gold_flags", []))
        state.runs = {k: RunRecord(**v) for k, v in obj.get("runs", {}).items()}
        state.idempotency = dict(obj.get("idempotency", {}))
        state.audit = list(obj.get("audit", []))
        return state

    def _load_artifacts(self) -> None:
        process_dir = self.root / "process"
        if process_dir.exists():
            for path in sorted(process_dir.glob("*.json")):
                model = load_process(path)
                self._models[model.model_id] = model
        sets_dir = self.root / "sets"
        if sets_dir.exists():
            for path in sorted(sets_dir.glob("*.jsonl")):
                if path.name.endswith(".documents.jsonl"):
                    continue
                docs = path.with_name(path.stem + ".documents.jsonl")
                study_set = load_study_set(path, documents=docs if docs.exists() else None)
                self._sets[study_set.use_case_id] = study_set

    def _append(self, kind: str, data: dict) -> dict:
        self._seq += 1
        event = {"seq": self._seq, "at": _now(), "kind": kind, "data": data}
        with open(self._events_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")
            fh.flush()
        self._apply(event)
        return event

    def snapshot(self) -> None:
        with self._lock:
            payload = {"version": self._seq, "state": self._state.to_json()}
            tmp = self._snapshot_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
            tmp.replace(self._snapshot_path)

    # --- event application (replay-safe, no wall clock, no randomness) -----

    def _apply(self, event: dict) -> None:
        kind, data = event["kind"], event["data"]
        state = self._state
        if kind == "enqueue":
            for obj in data["items"]:
                item = ReviewItem.from_json(obj)
                state.items.setdefault(item.item_id, item)
        elif kind == "decision":
            item = state.items[data["item_id"]]
            item.status = data["status"]
            item.expert_label = data["expert_label"]
            item.decided_at = data["decided_at"]
            item.reviewer = data["reviewer"]
            self._apply_gold_delta(data["gold_delta"])
            state.idempotency[data["idempotency_key"]] = data["result"]
            state.audit.append(
                {
                    "kind": "decision",
                    "item_id": data["item_id"],
                    "reviewer": data["reviewer"],
                    "at": data["decided_at"],
                    "action": data["action"],
                }
            )
        elif kind == "gold_import":
            for record in data["records"]:
                state.gold[record["para_id"]] = LabelSet.from_json(record)
                if record.get("provenance"):
                    state.gold_provenance[record["para_id"]] = record["provenance"]
            state.audit.append(
                {"kind": "gold_import", "count": len(data["records"]), "at": event["at"]}
            )
        elif kind == "run":
            record = RunRecord(**data)
            state.runs[record.run_id] = record
        elif kind == "run_status":
            run = state.runs[data["run_id"]]
            run.status = data["status"]
            run.output_path = data.get("output_path", run.output_path)
            run.error = data.get("error")
        else:
            log.warning("unknown event kind %s ignored", kind)

    def _apply_gold_delta(self, delta: dict) -> None:
        state = self._state
        para_id = delta["para_id"]
        labels = state.gold.get(para_id, LabelSet()).copy()
        level, node_id = delta["level"], delta.get("node_id")
        new_type = RelevanceType.parse(delta["type"])
        if level == 1:
            labels.level1 = new_type if delta["overwrite"] else stronger(labels.level1, new_type)
        else:
            table = labels.level2 if level == 2 else labels.level3
            current = table.get(node_id, RelevanceType.IRRELEVANT)
            table[node_id] = new_type if delta["overwrite"] else stronger(current, new_type)
        for lift in delta.get("lifts", []):
            lift_type = RelevanceType.parse(lift["type"])
            if lift["level"] == 1:
                labels.level1 = stronger(labels.level1, lift_type)
            else:
                table = labels.level2 if lift["level"] == 2 else labels.level3
                current = table.get(lift["node_id"], RelevanceType.IRRELEVANT)
                table[lift["node_id"]] = stronger(current, lift_type)
        state.gold[para_id] = labels
        state.gold_provenance[para_id] = delta["provenance"]
        for flag in delta.get("flags", []):
            state.gold_flags.append(flag)

    # --- artifact registration ---------------------------------------------

    def add_process(self, source: str | Path | ProcessModel) -> ProcessModel:
        model = source if isinstance(source, ProcessModel) else load_process(source)
        target = self.root / "process" / f"{model.model_id}.json"
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(json.dumps(model.to_json(), indent=2) + "\n", encoding="utf-8")
        self._models[model.model_id] = model
        return model

    def add_study_set(self, path: str | Path, documents: str | Path | None = None,
                      set_id: str | None = None) -> StudySet:
        study_set = load_study_set(path, use_case_id=set_id, documents=documents)
        target = self.root / "sets" / f"{study_set.use_case_id}.jsonl"
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(Path(path).read_text(encoding="utf-8"), encoding="utf-8")
        if documents:
            docs_target = self.root / "sets" / f"{study_set.use_case_id}.documents.jsonl"
            docs_target.write_text(Path(documents).read_text(encoding="utf-8"), encoding="utf-8")
        self._sets[study_set.use_case_id] = study_set
        return study_set

    def model(self, model_id: str) -> ProcessModel:
        try:
            return self._models[model_id]
        except KeyError:
            raise StoreError(f"unknown process model: {model_id}") from None

    def study_set(self, set_id: str) -> StudySet:
        try:
            return self._sets[set_id]
        except KeyError:
            raise StoreError(f"unknown study set: {set_id}") from None

    @property
    def models(self) -> dict[str, ProcessModel]:
        return dict(self._models)

    @property
    def study_sets(self) -> dict[str, StudySet]:
        return dict(self._sets)

    # --- runs ----------------------------------------------------------------

    def create_run(self, kind: str, params: dict, run_id: str | None = None) -> RunRecord:
        with self._lock:
            run_id = run_id or uuid.uuid4().hex[:12]
            if run_id in self._state.runs:
                raise StoreError(f"run {run_id} already exists")
            self._append("run", RunRecord(run_id, kind, params).to_json())
            return self._state.runs[run_id]

    def set_run_status(self, run_id: str, status: str, output_path: str | None = None,
                       error: str | None = None) -> None:
        with self._lock:
            if run_id not in self._state.runs:
                raise StoreError(f"unknown run: {run_id}")
            self._append(
                "run_status",
                {"run_id": run_id, "status": status, "output_path": output_path, "error": error},
            )

    def run(self, run_id: str) -> RunRecord:
        try:
            return self._state.runs[run_id]
        except KeyError:
            raise StoreError(f"unknown run: {run_id}") from None

    def find_run(self, run_id: str) -> RunRecord | None:
        return self._state.runs.get(run_id)

    def run_dir(self, run_id: str) -> Path:
        path = self.root / "runs" / run_id
        path.mkdir(parents=True, exist_ok=True)
        return path

    # --- review queue -----------------------------------------------------------

    def enqueue_items(self, items: list[ReviewItem]) -> int:
        """Add pending items; duplicates (same item_id, i.e. same run, node,
        paragraph) are collapsed. Returns the number actually added."""
        with self._lock:
            fresh = [i for i in items if i.item_id not in self._state.items]
            if fresh:
                self._append("enqueue", {"items": [i.to_json() for i in fresh]})
            return len(fresh)

    def queue(
        self,
        status: str | None = PENDING,
        level: int | None = None,
        method: str | None = None,
    ) -> list[ReviewItem]:
        items = [
            item
            for item in self._state.items.values()
            if (status is None or item.status == status)
            and (level is None or item.level == level)
            and (method is None or item.method == method)
        ]
        # machine score descending puts the strongest pre-selections first
        items.sort(key=lambda i: (-(i.machine_score or 0.0), i.item_id))
        return items

    def item(self, item_id: str) -> ReviewItem:
        try:
            return self._state.items[item_id]
        except KeyError:
            raise StoreError(f"unknown review item: {item_id}") from None

    def progress(self) -> dict:
        pending = decided = 0
        per_level: dict[str, dict[str, int]] = {}
        for item in self._state.items.values():
            bucket = per_level.setdefault(str(item.level), {"pending": 0, "decided": 0})
            if item.status == PENDING:
                pending += 1
                bucket["pending"] += 1
            else:
                decided += 1
                bucket["decided"] += 1
        return {"pending": pending, "decided": decided, "per_level": per_level}

    # --- decisions -----------------------------------------------------------------

    def decide(
        self,
        item_id: str,
        action: str,
        reviewer: str,
        idempotency_key: str,
        new_type: str | None = None,
    ) -> dict:
        """Apply an expert decision. Replaying the same idempotency key
        returns the original result; deciding an already-decided item with a
        new key is a conflict."""
        with self._lock:
            if idempotency_key in self._state.idempotency:
                return self._state.idempotency[idempotency_key]
            item = self.item(item_id)
            if item.status != PENDING:
                raise ConflictError(
                    f"item {item_id} already decided ({item.status})", item.to_json()
                )
            if action == "confirm":
                if item.machine_label is None:
                    raise StoreError(
                        f"item {item_id} has no machine label to confirm; use retype"
                    )
                label = RelevanceType.parse(item.machine_label)
                status = "confirmed"
            elif action == "reject":
                label = RelevanceType.IRRELEVANT
                status = "rejected"
            elif action == "retype":
                if new_type is None:
                    raise StoreError("retype requires a type")
                label = RelevanceType.parse(new_type)
                status = "retyped"
            else:
                raise StoreError(f"unknown action: {action!r}")

            decided_at = _now()
            gold_delta = self._gold_delta_for(item, label, reviewer)
            updated = ReviewItem.from_json(item.to_json())
            updated.status = status
            updated.expert_label = label.value
            updated.decided_at = decided_at
            updated.reviewer = reviewer
            result = {"item": updated.to_json(), "gold_delta": gold_delta}
            self._append(
                "decision",
                {
                    "item_id": item_id,
                    "action": action,
                    "status": status,
                    "expert_label": label.value,
                    "decided_at": decided_at,
                    "reviewer": reviewer,
                    "idempotency_key": idempotency_key,
                    "gold_delta": gold_delta,
                    "result": result,
                },
            )
            return result

    def _gold_delta_for(self, item: ReviewItem, label: RelevanceType, reviewer: str) -> dict:
        """Translate a decision into a gold update.

        Relevant labels lift ancestors (closure is monotone up). Rejections
        never remove ancestor labels and never break closure: a node that
        still has relevant descendants keeps the type its children force, and
        the case is flagged for manual review instead.
        """
        run = self._state.runs.get(item.run_id)
        model = None
        if run and run.params.get("model_id") in self._models:
            model = self._models[run.params["model_id"]]
        current = self._state.gold.get(item.para_id, LabelSet())
        delta = {
            "para_id": item.para_id,
            "level": item.level,
            "node_id": item.query_node_id if item.level > 1 else None,
            "type": label.value,
            "overwrite": True,
            "provenance": f"decision by {reviewer} on item {item.item_id}",
            "lifts": [],
            "flags": [],
        }

        if label.relevant:
            if item.level == 3:
                if model is None:
                    raise StoreError(
                        f"run {item.run_id} has no registered process model; "
                        "cannot lift level-2 ancestors for a level-3 label"
                    )
                parent = model.node(item.query_node_id).parent_id
                delta["lifts"].append({"level": 2, "node_id": parent, "type": label.value})
            if item.level > 1:
                delta["lifts"].append({"level": 1, "node_id": None, "type": label.value})
            return delta

        # rejection: compute the minimum the children still force
        forced = RelevanceType.IRRELEVANT
        if item.level == 1:
            for t in list(current.level2.values()) + list(current.level3.values()):
                forced = stronger(forced, t)
        elif item.level == 2:
            if model is not None:
                for node_id, t in current.level3.items():
                    if model.node(node_id).parent_id == item.query_node_id:
                        forced = stronger(forced, t)
        if forced.relevant:
            delta["type"] = forced.value
            delta["flags"].append(
                f"{item.para_id}: rejection of {item.query_node_id or 'level 1'} kept as "
                f"{forced.value} because relevant descendants remain; review manually"
            )
        elif item.level > 1 and current.level1.relevant:
            remaining = [
                t
                for n, t in list(current.level2.items()) + list(current.level3.items())
                if n != item.query_node_id and t.relevant
            ]
            if not remaining:
                delta["flags"].append(
                    f"{item.para_id}: last relevant node rejected; "
                    "ancestor labels kept, review manually"
                )
        return delta

    # --- gold ------------------------------------------------------------------------

    def gold_standard(self, use_case_id: str = "store") -> GoldStandard:
        return GoldStandard(
            use_case_id=use_case_id,
            labels={k: v.copy() for k, v in self._state.gold.items()},
            provenance=dict(self._state.gold_provenance),
        )

    def export_gold(self) -> list[dict]:
        gold = self.gold_standard()
        return gold.to_records()

    def import_gold(self, records: list[dict], model_id: str | None = None) -> int:
        """Bulk gold import (audited). Validates closure before committing."""
        model = self._models.get(model_id) if model_id else None
        labels = {r["para_id"]: LabelSet.from_json(r) for r in records}
        validate_gold(GoldStandard("import", labels), model=model)
        with self._lock:
            self._append("gold_import", {"records": records})
            return len(records)

    @property
    def gold_flags(self) -> list[str]:
        return list(self._state.gold_flags)

    @property
    def audit_log(self) -> list[dict]:
        return list(self._state.audit)

    def state_dump(self) -> dict:
        """Full state for equality checks (crash-replay tests)."""
        return self._state.to_json()


# --- queue building from run outputs ----------------------------------------------


def items_from_ranking(
    run_id: str, ranking, level: int, top_k: int, method: str
) -> list[ReviewItem]:
    items = []
    for para_id, score in ranking.entries[:top_k]:
        item_id = f"{run_id}:{ranking.query_node_id}:{para_id}"
        items.append(
            ReviewItem(
                item_id=item_id,
                para_id=para_id,
                query_node_id=ranking.query_node_id,
                level=level,
                method=method,
                run_id=run_id,
                machine_score=score,
            )
        )
    return items


def items_from_judgments(
    run_id: str, judgments, model: ProcessModel, label_filter: str = "non_irrelevant"
) -> list[ReviewItem]:
    """One item per non-irrelevant (paragraph, node) the judge reported, plus
    a level-1 item per relevant paragraph."""
    if label_filter != "non_irrelevant":
        raise StoreError(f"unknown label filter: {label_filter!r}")
    items = []
    root_id = model.root.node_id
    for judgment in judgments:
        if judgment.level1.relevant:
            items.append(
                ReviewItem(
                    item_id=f"{run_id}:{root_id}:{judgment.para_id}",
                    para_id=judgment.para_id,
                    query_node_id=root_id,
                    level=1,
                    method="llm_judge",
                    run_id=run_id,
                    machine_label=judgment.level1.value,
                    machine_justification=judgment.justification,
                )
            )
        for level, table in ((2, judgment.level2), (3, judgment.level3)):
            for node_id, label in table.items():
                if not label.relevant:
                    continue
                items.append(
                    ReviewItem(
                        item_id=f"{run_id}:{node_id}:{judgment.para_id}",
                        para_id=judgment.para_id,
                        query_node_id=node_id,
                        level=level,
                        method="llm_judge",
                        run_id=run_id,
                        machine_label=label.value,
                        machine_justification=judgment.justification,
                    )
                )
    return items
