"""Business process models: context, 3-level node hierarchy, BPMN extraction.

A complete model is a tree of depth exactly 3: one process node (level 1),
sub-processes (level 2), and tasks or throwing events (level 3). Catching
events, gateways, and flows are not relevance targets and never appear as
nodes. Models are immutable after load.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from pathlib import Path

LEVELS = ("L1_process", "L2_subprocess", "L3_task_or_event")
KINDS = ("process", "subprocess", "task", "throwing_event")

BPMN_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"

# BPMN element local names mapped onto node kinds. End events throw their
# trigger on completion, so they count as throwing events alongside
# intermediate throws; start/catch/boundary events and gateways are ignored.
_TASK_TAGS = {
    "task",
    "userTask",
    "serviceTask",
    "sendTask",
    "receiveTask",
    "manualTask",
    "scriptTask",
    "businessRuleTask",
}
_THROW_TAGS = {"intermediateThrowEvent", "endEvent"}
_SUBPROCESS_TAGS = {"subProcess", "callActivity", "transaction"}


class ProcessModelError(ValueError):
    """Structurally invalid process model."""


class BpmnParseError(ValueError):
    """Malformed or empty BPMN input."""


@dataclass(frozen=True)
class BusinessContext:
    business_id: str
    location: str
    domain: str
    size: str

    def __post_init__(self):
        for name in ("location", "domain", "size"):
            if not getattr(self, name).strip():
                raise ProcessModelError(f"business context field {name!r} is empty")

    def to_json(self) -> dict:
        return {"location": self.location, "domain": self.domain, "size": self.size}


@dataclass(frozen=True)
class ProcessNode:
    node_id: str
    level: str  # one of LEVELS
    name: str
    description: str
    parent_id: str | None = None
    kind: str = "task"

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ProcessModelError(f"node {self.node_id}: unknown level {self.level!r}")
        if self.kind not in KINDS:
            raise ProcessModelError(f"node {self.node_id}: unknown kind {self.kind!r}")
        expected = {
            "L1_process": {"process"},
            "L2_subprocess": {"subprocess"},
            "L3_task_or_event": {"task", "throwing_event"},
        }[self.level]
        if self.kind not in expected:
            raise ProcessModelError(
                f"node {self.node_id}: kind {self.kind!r} not allowed at {self.level}"
            )

    @property
    def level_num(self) -> int:
        return LEVELS.index(self.level) + 1

    def to_json(self) -> dict:
        return {
            "node_id": self.node_id,
            "level": self.level,
            "name": self.name,
            "description": self.description,
            "parent_id": self.parent_id,
            "kind": self.kind,
        }


@dataclass
class ProcessModel:
    model_id: str
    context: BusinessContext
    nodes: list[ProcessNode]
    bpmn_xml: str | None = None
    complete: bool = True  # skeletons from BPMN are incomplete until described
    _by_id: dict[str, ProcessNode] = field(init=False, repr=False)

    def __post_init__(self):
        self._by_id = {}
        for node in self.nodes:
            if node.node_id in self._by_id:
                raise ProcessModelError(f"duplicate node id: {node.node_id}")
            self._by_id[node.node_id] = node
        if self.complete:
            self._validate_tree()

    def _validate_tree(self):
        roots = [n for n in self.nodes if n.level == "L1_process"]
        if len(roots) != 1:
            raise ProcessModelError(f"expected exactly one L1 node, found {len(roots)}")
        root = roots[0]
        if root.parent_id is not None:
            raise ProcessModelError(f"L1 node {root.node_id} must not have a parent")
        for node in self.nodes:
            if node.level == "L1_process":
                continue
            if node.parent_id is None or node.parent_id not in self._by_id:
                raise ProcessModelError(f"orphan node: {node.node_id}")
            parent = self._by_id[node.parent_id]
            if node.level == "L2_subprocess" and parent.level != "L1_process":
                raise ProcessModelError(f"depth violation at node {node.node_id}")
            if node.level == "L3_task_or_event" and parent.level != "L2_subprocess":
                raise ProcessModelError(f"depth violation at node {node.node_id}")
            if not node.description.strip():
                raise ProcessModelError(f"node {node.node_id} has an empty description")
        if not root.description.strip():
            raise ProcessModelError(f"node {root.node_id} has an empty description")

    def node(self, node_id: str) -> ProcessNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise ProcessModelError(f"unknown node: {node_id}") from None

    def nodes_at(self, level: int) -> list[ProcessNode]:
        return [n for n in self.nodes if n.level_num == level]

    @property
    def root(self) -> ProcessNode:
        return next(n for n in self.nodes if n.level == "L1_process")

    def ancestors(self, node_id: str) -> list[ProcessNode]:
        """Ancestors from the root downward (L1 first)."""
        chain = []
        node = self.node(node_id)
        while node.parent_id is not None:
            node = self.node(node.parent_id)
            chain.append(node)
        return list(reversed(chain))

    def parent_map(self) -> dict[str, str]:
        """level-3 node id -> level-2 parent id, for label closure."""
        return {
            n.node_id: n.parent_id
            for n in self.nodes
            if n.level == "L3_task_or_event" and n.parent_id
        }

    def node_ids_at(self, level: int) -> set[str]:
        return {n.node_id for n in self.nodes_at(level)}

    def incomplete_nodes(self) -> list[str]:
        return [n.node_id for n in self.nodes if not n.description.strip()]

    def to_json(self) -> dict:
        obj = {
            "model_id": self.model_id,
            "context": self.context.to_json(),
            "nodes": [n.to_json() for n in self.nodes],
        }
        if self.bpmn_xml is not None:
            obj["bpmn_xml"] = self.bpmn_xml
        if not self.complete:
            obj["complete"] = False
        return obj


def load_process(source: str | Path | dict) -> ProcessModel:
    """Load and validate a complete process model from process.json."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            obj = json.load(fh)
    else:
        obj = source
    ctx = obj.get("context") or {}
    context = BusinessContext(
        business_id=obj.get("model_id", "business"),
        location=ctx.get("location", ""),
        domain=ctx.get("domain", ""),
        size=ctx.get("size", ""),
    )
    nodes = [
        ProcessNode(
            node_id=n["node_id"],
            level=n["level"],
            name=n.get("name", n["node_id"]),
            description=n.get("description", ""),
            parent_id=n.get("parent_id"),
            kind=n.get("kind", "task"),
        )
        for n in obj["nodes"]
    ]
    return ProcessModel(
        model_id=obj["model_id"],
        context=context,
        nodes=nodes,
        bpmn_xml=obj.get("bpmn_xml"),
        complete=obj.get("complete", True),
    )


def node_query_text(model: ProcessModel, node_id: str, verbosity: str = "description_only") -> str:
    """Query text for a node: its description verbatim, or with ancestor
    descriptions prepended (L1 context first) separated by blank lines."""
    node = model.node(node_id)
    if verbosity == "description_only":
        return node.description
    if verbosity == "with_ancestors":
        parts = [a.description for a in model.ancestors(node_id)] + [node.description]
        return "\n\n".join(parts)
    raise ValueError(f"unknown verbosity: {verbosity!r}")


# --- BPMN 2.0 skeleton extraction -------------------------------------------


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def extract_bpmn_skeleton(bpmn_xml: str, model_id: str = "bpmn-skeleton") -> ProcessModel:
    """Extract node names, kinds, and containment from BPMN 2.0 XML.

    Task-family elements become level-3 task nodes, throw events become
    level-3 throwing_event nodes, sub-processes and call activities become
    level-2 nodes. Catching events, gateways, and flows are ignored. All
    descriptions are left empty and the model is marked incomplete; it must
    not be used for judging until descriptions are supplied.
    """
    try:
        root = ET.fromstring(bpmn_xml)
    except ET.ParseError as exc:
        raise BpmnParseError(f"malformed XML at line {exc.position[0]}, "
                             f"column {exc.position[1]}: {exc.msg}") from exc

    processes = [el for el in root.iter() if _local(el.tag) == "process"]
    if not processes:
        raise BpmnParseError("empty model: no process element found")
    process_el = processes[0]

    used: set[str] = set()

    def unique_id(raw: str | None, prefix: str) -> str:
        candidate = raw or f"{prefix}-{len(used) + 1}"
        while candidate in used:
            candidate += "x"
        used.add(candidate)
        return candidate

    root_id = unique_id(process_el.get("id"), "process")
    nodes = [
        ProcessNode(
            node_id=root_id,
            level="L1_process",
            name=process_el.get("name", root_id) or root_id,
            description="",
            parent_id=None,
            kind="process",
        )
    ]

    def walk(container: ET.Element, parent_id: str) -> None:
        for el in list(container):
            tag = _local(el.tag)
            if tag in _SUBPROCESS_TAGS:
                sub_id = unique_id(el.get("id"), "subprocess")
                nodes.append(
                    ProcessNode(
                        node_id=sub_id,
                        level="L2_subprocess",
                        name=el.get("name", sub_id) or sub_id,
                        description="",
                        parent_id=parent_id,
                        kind="subprocess",
                    )
                )
                walk(el, sub_id)
            elif tag in _TASK_TAGS or tag in _THROW_TAGS:
                kind = "task" if tag in _TASK_TAGS else "throwing_event"
                node_id = unique_id(el.get("id"), kind)
                nodes.append(
                    ProcessNode(
                        node_id=node_id,
                        level="L3_task_or_event",
                        name=el.get("name", node_id) or node_id,
                        description="",
                        parent_id=parent_id,
                        kind=kind,
                    )
                )
            # catching events, gateways, lanes, flows: ignored

    walk(process_el, root_id)
    context = BusinessContext(
        business_id=model_id, location="unknown", domain="unknown", size="unknown"
    )
    return ProcessModel(
        model_id=model_id,
        context=context,
        nodes=nodes,
        bpmn_xml=bpmn_xml,
        complete=False,
    )


def with_descriptions(model: ProcessModel, descriptions: dict[str, str]) -> ProcessModel:
    """Fill node descriptions on a skeleton, re-validating as a complete model."""
    nodes = [
        replace(n, description=descriptions.get(n.node_id, n.description)) for n in model.nodes
    ]
    return ProcessModel(
        model_id=model.model_id,
        context=model.context,
        nodes=nodes,
        bpmn_xml=model.bpmn_xml,
        complete=True,
    )
