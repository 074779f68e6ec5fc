"""Diagram and serialization backends.

A workflow renders to a DiagramSpec (nodes, edges, loop scope boxes) that two
surface emitters share: Graphviz DOT and Mermaid flowchart. Conventions:
artifacts are boxes, transforms ellipses, given artifacts get a double
border, loops become dashed boxes, feedback edges are dashed, conditionals
appear as decision diamonds with yes/no branch edges and labeled exit edges.
`to_json` serializes ASTs and analysis results as canonical JSON (sorted
keys, declaration-order arrays, version field).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from atwl.analysis import (
    BlockMatch,
    CorpusIndex,
    LoopClassification,
    StageReport,
    WorkflowAnalysis,
)
from atwl.graph import DependencyGraph, TemplateReport
from atwl.ontology import Actor
from atwl.syntax.nodes import (
    ArtifactDecl,
    Assignment,
    Conditional,
    LoopDecl,
    TransformDecl,
    Workflow,
    walk_scoped,
)
from atwl.syntax.printer import format_template

JSON_VERSION = 1

_CONDITION_LABEL_LIMIT = 40


@dataclass(frozen=True)
class DiagramNode:
    id: str
    label: str
    kind: str  # "artifact" | "transform" | "decision"
    given: bool = False
    actor: str | None = None
    scope: str = "root"


@dataclass(frozen=True)
class DiagramEdge:
    source: str
    target: str
    kind: str  # "input" | "output" | "reference" | "branch" | "exit"
    feedback: bool = False
    label: str | None = None


@dataclass
class DiagramSpec:
    nodes: list[DiagramNode] = field(default_factory=list)
    edges: list[DiagramEdge] = field(default_factory=list)
    scopes: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)

    def dataflow_edges(self) -> list[DiagramEdge]:
        return [e for e in self.edges if e.kind in ("input", "output")]


def _first_declared(items) -> str | None:
    for item in items:
        if isinstance(item, (ArtifactDecl, TransformDecl)):
            return item.name
        if isinstance(item, LoopDecl):
            head = _first_declared(item.body)
            if head is not None:
                return head
    return None


def build_diagram_spec(
    workflow: Workflow, graph: DependencyGraph, include_references: bool = False
) -> DiagramSpec:
    """Assemble the renderer-independent diagram description."""
    spec = DiagramSpec()
    loop_chain_of: dict[str, tuple[str, ...]] = {}
    conditional_ids: dict[int, str] = {}
    counter = 0

    for item, scopes in walk_scoped(workflow.body):
        loops = tuple(f[1].name for f in scopes if f[0] == "loop")
        innermost = loops[-1] if loops else "root"
        if isinstance(item, ArtifactDecl):
            label = item.name if item.type is None else f"{item.name}\n{item.type.keyword}"
            spec.nodes.append(
                DiagramNode(item.name, label, "artifact", given=item.origin_given,
                            scope=innermost)
            )
            loop_chain_of[item.name] = loops
        elif isinstance(item, TransformDecl):
            label = item.name if item.intent is None else f"{item.name}\n{item.intent.keyword}"
            spec.nodes.append(
                DiagramNode(item.name, label, "transform",
                            actor=item.actor.keyword if item.actor else None,
                            scope=innermost)
            )
            loop_chain_of[item.name] = loops
        elif isinstance(item, Conditional):
            counter += 1
            glyph_id = f"decision_{counter}"
            conditional_ids[id(item)] = glyph_id
            condition = item.condition
            if len(condition) > _CONDITION_LABEL_LIMIT:
                condition = condition[: _CONDITION_LABEL_LIMIT - 3] + "..."
            spec.nodes.append(DiagramNode(glyph_id, condition, "decision", scope=innermost))
            loop_chain_of[glyph_id] = loops

    for edge in graph.edges:
        if edge.kind == "reference" and not include_references:
            continue
        spec.edges.append(
            DiagramEdge(edge.source, edge.target, edge.kind, feedback=edge.feedback)
        )

    # Decision glyph wiring: the nearest preceding declaration in the same
    # body drives the decision; branch heads get yes/no edges; an exit
    # directive becomes a labeled edge to the loop it leaves.
    def wire_conditionals(items, enclosing_loops: tuple[str, ...]) -> None:
        previous: str | None = None
        for item in items:
            if isinstance(item, (ArtifactDecl, TransformDecl)):
                previous = item.name
            elif isinstance(item, LoopDecl):
                wire_conditionals(item.body, enclosing_loops + (item.name,))
                previous = None
            elif isinstance(item, Conditional):
                glyph_id = conditional_ids[id(item)]
                if previous is not None:
                    spec.edges.append(DiagramEdge(previous, glyph_id, "branch"))
                for branch, label in ((item.then_branch, "yes"), (item.else_branch, "no")):
                    if not branch:
                        continue
                    head = _first_declared(branch)
                    if head is not None:
                        spec.edges.append(DiagramEdge(glyph_id, head, "branch", label=label))
                    for sub in branch:
                        if hasattr(sub, "loop_name"):  # ExitDirective
                            spec.edges.append(
                                DiagramEdge(glyph_id, sub.loop_name, "exit",
                                            label=f"exit {sub.loop_name}")
                            )
                    wire_conditionals(branch, enclosing_loops)

    wire_conditionals(workflow.body, ())

    for loop in workflow.loops():
        members = tuple(
            node.id for node in spec.nodes
            if loop.name in loop_chain_of.get(node.id, ())
        )
        spec.scopes.append((loop.name, members))
    return spec


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def to_dot(workflow: Workflow, graph: DependencyGraph, include_references: bool = False) -> str:
    """Render as a Graphviz digraph; deterministic for a fixed input."""
    spec = build_diagram_spec(workflow, graph, include_references)
    return render_dot(spec)


def render_dot(spec: DiagramSpec) -> str:
    lines = [
        "digraph workflow {",
        "  rankdir=TB;",
        "  compound=true;",
        '  node [fontname="Helvetica", fontsize=10];',
        '  edge [fontname="Helvetica", fontsize=9];',
    ]

    def node_attrs(node: DiagramNode) -> str:
        attrs = []
        if node.kind == "artifact":
            attrs.append("shape=box")
            if node.given:
                attrs.append("peripheries=2")
        elif node.kind == "transform":
            attrs.append("shape=ellipse")
            if node.actor == Actor.HUMAN.keyword:
                attrs.extend(["style=filled", 'fillcolor="#f5e0b7"'])
            elif node.actor == Actor.HYBRID.keyword:
                attrs.extend(["style=filled", 'fillcolor="#d7e8f7"'])
        else:
            attrs.extend(["shape=diamond", "style=filled", 'fillcolor="#fdf6d8"'])
        attrs.append(f"label={_dot_quote(node.label)}")
        return ", ".join(attrs)

    scope_members = {name: set(members) for name, members in spec.scopes}
    # Innermost scope wins for placement; nested loops nest their clusters.
    placed: set[str] = set()
    loop_children: dict[str, list[str]] = {name: [] for name in scope_members}
    top_loops: list[str] = []
    for name, members in spec.scopes:
        parents = [
            other for other, other_members in spec.scopes
            if other != name and set(members) < set(other_members)
        ]
        if parents:
            innermost_parent = min(parents, key=lambda p: len(scope_members[p]))
            loop_children[innermost_parent].append(name)
        else:
            top_loops.append(name)

    nodes_by_id = {n.id: n for n in spec.nodes}

    def direct_members(loop_name: str) -> list[str]:
        nested = set()
        for child in loop_children[loop_name]:
            nested |= scope_members[child]
        return [n.id for n in spec.nodes if n.id in scope_members[loop_name] - nested]

    def emit_cluster(loop_name: str, indent: str) -> None:
        lines.append(f"{indent}subgraph cluster_{_sanitize(loop_name)} {{")
        lines.append(f"{indent}  label={_dot_quote('Loop ' + loop_name)};")
        lines.append(f"{indent}  style=dashed;")
        for node_id in direct_members(loop_name):
            node = nodes_by_id[node_id]
            lines.append(f"{indent}  {_dot_quote(node.id)} [{node_attrs(node)}];")
            placed.add(node_id)
        for child in loop_children[loop_name]:
            emit_cluster(child, indent + "  ")
        lines.append(f"{indent}}}")

    for loop_name in top_loops:
        emit_cluster(loop_name, "  ")
    for node in spec.nodes:
        if node.id not in placed:
            lines.append(f"  {_dot_quote(node.id)} [{node_attrs(node)}];")

    loop_anchor = {
        name: next((m for m in direct_members(name)), None) for name in scope_members
    }
    for edge in spec.edges:
        attrs = []
        target = edge.target
        if edge.kind == "exit" and edge.target in scope_members:
            # Clusters are not addressable endpoints; aim at a member node and
            # clip the arrow at the cluster border.
            anchor = loop_anchor.get(edge.target)
            if anchor is not None:
                target = anchor
                attrs.append(f"lhead=cluster_{_sanitize(edge.target)}")
        if edge.feedback:
            attrs.append("style=dashed")
        if edge.kind == "reference":
            attrs.extend(["style=dotted", "arrowhead=open", 'color="#888888"'])
        if edge.kind == "exit":
            attrs.append("style=dotted")
        if edge.label:
            attrs.append(f"label={_dot_quote(edge.label)}")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {_dot_quote(edge.source)} -> {_dot_quote(target)}{suffix};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _sanitize(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in name)


def to_mermaid(workflow: Workflow, graph: DependencyGraph, include_references: bool = False) -> str:
    """Render as a Mermaid flowchart with the same node/edge multiset as DOT."""
    spec = build_diagram_spec(workflow, graph, include_references)
    return render_mermaid(spec)


def render_mermaid(spec: DiagramSpec) -> str:
    lines = ["flowchart TD"]
    key_of = {node.id: f"n{i}" for i, node in enumerate(spec.nodes)}

    def node_line(node: DiagramNode) -> str:
        label = node.label.replace("\n", "<br>").replace('"', "#quot;")
        key = key_of[node.id]
        if node.kind == "decision":
            return f'{key}{{"{label}"}}'
        if node.kind == "transform":
            return f'{key}(["{label}"])'
        if node.given:
            return f'{key}[["{label}"]]'
        return f'{key}["{label}"]'

    scope_members = {name: set(members) for name, members in spec.scopes}
    loop_children: dict[str, list[str]] = {name: [] for name in scope_members}
    top_loops: list[str] = []
    for name, members in spec.scopes:
        parents = [
            other for other, other_members in spec.scopes
            if other != name and set(members) < set(other_members)
        ]
        if parents:
            innermost = min(parents, key=lambda p: len(scope_members[p]))
            loop_children[innermost].append(name)
        else:
            top_loops.append(name)

    nodes_by_id = {n.id: n for n in spec.nodes}
    placed: set[str] = set()

    def direct_members(loop_name: str) -> list[str]:
        nested = set()
        for child in loop_children[loop_name]:
            nested |= scope_members[child]
        return [n.id for n in spec.nodes if n.id in scope_members[loop_name] - nested]

    def emit_subgraph(loop_name: str, indent: str) -> None:
        lines.append(f'{indent}subgraph {_sanitize(loop_name)} ["Loop {loop_name}"]')
        for node_id in direct_members(loop_name):
            lines.append(f"{indent}  {node_line(nodes_by_id[node_id])}")
            placed.add(node_id)
        for child in loop_children[loop_name]:
            emit_subgraph(child, indent + "  ")
        lines.append(f"{indent}end")

    for loop_name in top_loops:
        emit_subgraph(loop_name, "  ")
    for node in spec.nodes:
        if node.id not in placed:
            lines.append(f"  {node_line(node)}")

    for edge in spec.edges:
        source = key_of.get(edge.source, _sanitize(edge.source))
        if edge.kind == "exit" and edge.target in scope_members:
            target = _sanitize(edge.target)  # subgraph ids are linkable
        else:
            target = key_of.get(edge.target, _sanitize(edge.target))
        dashed = edge.feedback or edge.kind in ("reference", "exit")
        if edge.label:
            arrow = f"-. {edge.label} .->" if dashed else f"-->|{edge.label}|"
        else:
            arrow = "-.->" if dashed else "-->"
        lines.append(f"  {source} {arrow} {target}")
    return "\n".join(lines) + "\n"


# -- canonical JSON -----------------------------------------------------------


def _scope_path(scopes) -> list[str]:
    path = []
    for frame in scopes:
        if frame[0] == "loop":
            path.append(frame[1].name)
        else:
            path.append(f"{frame[1].condition}:{frame[2]}")
    return path


def workflow_to_dict(workflow: Workflow) -> dict:
    """Flat JSON form: header plus per-kind arrays in declaration order."""
    artifacts = []
    transforms = []
    loops = []
    conditionals = []
    assignments = []
    for item, scopes in walk_scoped(workflow.body):
        scope = _scope_path(scopes)
        if isinstance(item, ArtifactDecl):
            entry = {
                "id": item.name,
                "type": item.type.keyword if item.type else None,
                "references": list(item.references),
                "origin_given": item.origin_given,
                "scope": scope,
            }
            if item.internal_structure is not None:
                entry["internal_structure"] = item.internal_structure.keyword
            if item.embedment is not None:
                entry["embedment"] = sorted(e.keyword for e in item.embedment)
            if item.features:
                entry["features"] = [
                    {
                        "id": f.name,
                        "value_structure": f.value_structure.keyword if f.value_structure else None,
                        "value_type": sorted(v.keyword for v in f.value_type) if f.value_type else None,
                        "description": f.description,
                    }
                    for f in item.features
                ]
            if item.value_structure is not None:
                entry["value_structure"] = item.value_structure.keyword
            if item.value_type is not None:
                entry["value_type"] = sorted(v.keyword for v in item.value_type)
            for attr in ("representation_form", "model_type", "context", "principle",
                         "layout", "form", "encoding", "description"):
                value = getattr(item, attr)
                if value is not None:
                    entry[attr] = value
            if item.unknown_fields:
                entry["unknown_fields"] = [
                    {"key": u.key, "value": u.value} for u in item.unknown_fields
                ]
            artifacts.append(entry)
        elif isinstance(item, TransformDecl):
            entry = {
                "id": item.name,
                "intent": item.intent.keyword if item.intent else None,
                "input": list(item.inputs),
                "output": list(item.outputs),
                "actor": item.actor.keyword if item.actor else None,
                "scope": scope,
            }
            if item.manner is not None:
                entry["manner"] = item.manner
            if item.description is not None:
                entry["description"] = item.description
            if item.unknown_fields:
                entry["unknown_fields"] = [
                    {"key": u.key, "value": u.value} for u in item.unknown_fields
                ]
            transforms.append(entry)
        elif isinstance(item, LoopDecl):
            loops.append({
                "id": item.name,
                "purpose": item.purpose,
                "until": item.until,
                "scope": scope,
            })
        elif isinstance(item, Conditional):
            conditionals.append({
                "condition": item.condition,
                "scope": scope,
                "has_else": item.else_branch is not None,
                "exits": [
                    sub.loop_name
                    for branch in (item.then_branch, item.else_branch or ())
                    for sub in branch
                    if hasattr(sub, "loop_name")
                ],
            })
        elif isinstance(item, Assignment):
            assignments.append({
                "bindings": [
                    {"target": b.target, "source": b.source} for b in item.bindings
                ],
                "scope": scope,
            })
    return {
        "version": JSON_VERSION,
        "workflow": {
            "id": workflow.name,
            "template": format_template(workflow.template) if workflow.template else None,
            "description": workflow.description,
        },
        "artifacts": artifacts,
        "transforms": transforms,
        "loops": loops,
        "conditionals": conditionals,
        "assignments": assignments,
    }


def block_match_to_dict(match: BlockMatch) -> dict:
    return {
        "block": match.block_id,
        "bindings": {role: name for role, name in match.bindings},
        "scope": match.scope,
        "consumes": list(match.consumed_types),
        "produces": list(match.produced_types),
    }


def loop_classification_to_dict(item: LoopClassification) -> dict:
    return {
        "loop": item.loop_name,
        "category": item.category,
        "type": item.type_label,
        "evidence": {
            "has_assess": item.evidence.has_assess,
            "has_exit": item.evidence.has_exit,
            "has_spec_update": item.evidence.has_spec_update,
            "restructures_units": item.evidence.restructures_units,
            "updates_model": item.evidence.updates_model,
            "nesting_depth": item.evidence.nesting_depth,
            "visualise_actors": list(item.evidence.visualise_actors),
            "updated_types": list(item.evidence.updated_types),
        },
    }


def stage_report_to_dict(report: StageReport) -> dict:
    return {
        "stages": {name: stage for name, stage in report.stages},
        "flags": {name: flag for name, flag in report.flags},
        "presence": sorted(report.presence),
        "ordering_violations": [list(v) for v in report.ordering_violations],
        "entry_mode": report.entry_mode,
    }


def template_report_to_dict(report: TemplateReport) -> dict:
    return {
        "declared": format_template(report.declared),
        "extracted": format_template(report.extracted),
        "verdict": report.verdict,
        "notes": list(report.notes),
    }


def analysis_to_dict(analysis: WorkflowAnalysis) -> dict:
    coverage = analysis.coverage
    payload = {
        "version": JSON_VERSION,
        "workflow": analysis.workflow.name,
        "coverage": {
            "artifact_types": sorted(t.keyword for t in coverage.artifact_types),
            "intents": sorted(i.keyword for i in coverage.intents),
            "loops": coverage.loop_count,
            "nested": coverage.nested_loops,
        },
        "blocks": [block_match_to_dict(m) for m in analysis.blocks],
        "loop_classes": [loop_classification_to_dict(c) for c in analysis.loop_classes],
        "stages": stage_report_to_dict(analysis.stage_report),
        "signature": {
            "intent_bigrams": [list(b) for b in analysis.signature.intent_bigrams],
            "blocks": sorted(analysis.signature.blocks),
            "loop_categories": list(analysis.signature.loop_categories),
            "stage_presence": sorted(analysis.signature.stage_presence),
        },
    }
    if analysis.template_report is not None:
        payload["template"] = template_report_to_dict(analysis.template_report)
    return payload


def corpus_to_dict(index: CorpusIndex) -> dict:
    workflows = {}
    for key, entry in index.entries.items():
        item = {
            "path": entry.path,
            "errors": entry.error_count,
            "warnings": entry.warning_count,
            "codes": list(entry.codes),
        }
        if entry.coverage is not None:
            item["coverage"] = {
                "artifact_types": sorted(t.keyword for t in entry.coverage.artifact_types),
                "intents": sorted(i.keyword for i in entry.coverage.intents),
                "loops": entry.coverage.loop_count,
                "nested": entry.coverage.nested_loops,
            }
        if entry.signature is not None:
            item["signature"] = {
                "intent_bigrams": [list(b) for b in entry.signature.intent_bigrams],
                "blocks": sorted(entry.signature.blocks),
                "loop_categories": list(entry.signature.loop_categories),
                "stage_presence": sorted(entry.signature.stage_presence),
            }
        if entry.blocks:
            item["blocks"] = [block_match_to_dict(m) for m in entry.blocks]
        workflows[key] = item
    return {"version": JSON_VERSION, "workflows": workflows}


def to_json(obj) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    if isinstance(obj, Workflow):
        payload = workflow_to_dict(obj)
    elif isinstance(obj, WorkflowAnalysis):
        payload = analysis_to_dict(obj)
    elif isinstance(obj, CorpusIndex):
        payload = corpus_to_dict(obj)
    elif isinstance(obj, TemplateReport):
        payload = {"version": JSON_VERSION, **template_report_to_dict(obj)}
    else:
        raise TypeError(f"no canonical JSON form for {type(obj).__name__}")
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
