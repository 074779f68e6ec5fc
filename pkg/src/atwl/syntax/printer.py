"""Canonical pretty-printer.

Emits a normalized surface form: two-space indentation, one field per line,
free text quoted, sets as `{a, b}` in vocabulary order, declarations in source
order, one blank line between declarations. Printing a parsed workflow and
re-parsing the output yields an equal AST (spans aside), and equal ASTs print
to byte-identical text.
"""

from __future__ import annotations

from atwl.ontology import Embedment, ValueType
from atwl.syntax.nodes import (
    ArtifactDecl,
    Assignment,
    BodyItem,
    Conditional,
    ExitDirective,
    FeatureDecl,
    IntentStep,
    LoopDecl,
    LoopStep,
    TemplateChain,
    TransformDecl,
    Workflow,
)

_EMBEDMENT_ORDER = {v: i for i, v in enumerate(Embedment)}
_VALUE_TYPE_ORDER = {v: i for i, v in enumerate(ValueType)}


def format_template(chain: TemplateChain) -> str:
    """Render a template chain as `a -> b -> loop(c -> d)`."""
    parts = []
    for step in chain.steps:
        if isinstance(step, LoopStep):
            parts.append(f"loop({format_template(step.chain)})")
        elif isinstance(step, IntentStep):
            text = step.intent.keyword
            if step.annotation:
                text += f" ({step.annotation})"
            parts.append(text)
    return " -> ".join(parts)


def _quote(text: str) -> str:
    return f'"{text}"'


def _enum_set(values: frozenset, order: dict) -> str:
    members = sorted(values, key=order.__getitem__)
    if len(members) == 1:
        return members[0].keyword
    return "{" + ", ".join(m.keyword for m in members) + "}"


def _feature_lines(feature: FeatureDecl, indent: str) -> list[str]:
    lines = [f"{indent}- id: {feature.name}"]
    key_indent = indent + "  "
    if feature.value_structure is not None:
        lines.append(f"{key_indent}value structure: {feature.value_structure.keyword}")
    if feature.value_type is not None:
        lines.append(f"{key_indent}value type: {_enum_set(feature.value_type, _VALUE_TYPE_ORDER)}")
    if feature.description is not None:
        lines.append(f"{key_indent}description: {_quote(feature.description)}")
    for unknown in feature.unknown_fields:
        lines.append(f"{key_indent}{unknown.key}: {unknown.value}")
    return lines


def _artifact_lines(decl: ArtifactDecl, indent: str) -> list[str]:
    type_text = decl.type.keyword if decl.type is not None else "?"
    if decl.references:
        type_text += "(" + ", ".join(decl.references) + ")"
    lines = [f"{indent}artifact {decl.name} : {type_text}"]
    f = indent + "  "
    if decl.origin_given:
        lines.append(f"{f}origin: given")
    if decl.internal_structure is not None:
        lines.append(f"{f}internal structure: {decl.internal_structure.keyword}")
    if decl.embedment is not None:
        lines.append(f"{f}embedment: {_enum_set(decl.embedment, _EMBEDMENT_ORDER)}")
    if decl.features:
        lines.append(f"{f}features:")
        for feature in decl.features:
            lines.extend(_feature_lines(feature, f + "  "))
    if decl.value_structure is not None:
        lines.append(f"{f}value structure: {decl.value_structure.keyword}")
    if decl.value_type is not None:
        lines.append(f"{f}value type: {_enum_set(decl.value_type, _VALUE_TYPE_ORDER)}")
    if decl.representation_form is not None:
        lines.append(f"{f}representation form: {_quote(decl.representation_form)}")
    if decl.model_type is not None:
        lines.append(f"{f}model type: {_quote(decl.model_type)}")
    if decl.context is not None:
        lines.append(f"{f}context: {decl.context}")
    if decl.principle is not None:
        lines.append(f"{f}principle: {_quote(decl.principle)}")
    if decl.layout is not None:
        lines.append(f"{f}layout: {_quote(decl.layout)}")
    if decl.form is not None:
        lines.append(f"{f}form: {_quote(decl.form)}")
    if decl.encoding is not None:
        lines.append(f"{f}encoding: {_quote(decl.encoding)}")
    if decl.description is not None:
        lines.append(f"{f}description: {_quote(decl.description)}")
    for unknown in decl.unknown_fields:
        lines.append(f"{f}{unknown.key}: {unknown.value}")
    return lines


def _transform_lines(decl: TransformDecl, indent: str) -> list[str]:
    lines = [f"{indent}transform {decl.name} :"]
    f = indent + "  "
    if decl.intent is not None:
        lines.append(f"{f}intent: {decl.intent.keyword}")
    if decl.manner is not None:
        lines.append(f"{f}manner: {_quote(decl.manner)}")
    if decl.inputs:
        lines.append(f"{f}input: {', '.join(decl.inputs)}")
    if decl.outputs:
        lines.append(f"{f}output: {', '.join(decl.outputs)}")
    if decl.actor is not None:
        lines.append(f"{f}actor: {decl.actor.keyword}")
    if decl.description is not None:
        lines.append(f"{f}description: {_quote(decl.description)}")
    for unknown in decl.unknown_fields:
        lines.append(f"{f}{unknown.key}: {unknown.value}")
    return lines


def _loop_lines(decl: LoopDecl, indent: str) -> list[str]:
    lines = [f"{indent}loop {decl.name}:"]
    f = indent + "  "
    if decl.purpose is not None:
        lines.append(f"{f}purpose: {_quote(decl.purpose)}")
    if decl.until is not None:
        lines.append(f"{f}until: {_quote(decl.until)}")
    lines.append(f"{f}body:")
    lines.extend(_body_lines(decl.body, indent + "    "))
    lines.append(f"{indent}end loop {decl.name}")
    return lines


def _conditional_lines(decl: Conditional, indent: str) -> list[str]:
    lines = [f"{indent}if {decl.condition}:"]
    lines.append(f"{indent}  then:")
    lines.extend(_body_lines(decl.then_branch, indent + "    "))
    if decl.else_branch is not None:
        lines.append(f"{indent}  else:")
        lines.extend(_body_lines(decl.else_branch, indent + "    "))
    return lines


def _assignment_lines(decl: Assignment, indent: str) -> list[str]:
    lines = [f"{indent}assign:"]
    for binding in decl.bindings:
        lines.append(f"{indent}  {binding.target} := {binding.source}")
    return lines


def _item_lines(item: BodyItem, indent: str) -> list[str]:
    if isinstance(item, ArtifactDecl):
        return _artifact_lines(item, indent)
    if isinstance(item, TransformDecl):
        return _transform_lines(item, indent)
    if isinstance(item, LoopDecl):
        return _loop_lines(item, indent)
    if isinstance(item, Conditional):
        return _conditional_lines(item, indent)
    if isinstance(item, Assignment):
        return _assignment_lines(item, indent)
    if isinstance(item, ExitDirective):
        return [f"{indent}exit loop {item.loop_name}"]
    raise TypeError(f"unexpected body item {item!r}")


def _body_lines(items: tuple[BodyItem, ...], indent: str) -> list[str]:
    lines: list[str] = []
    for i, item in enumerate(items):
        if i:
            lines.append("")
        lines.extend(_item_lines(item, indent))
    return lines


def print_canonical(workflow: Workflow) -> str:
    """Serialize a workflow AST to its canonical surface form."""
    header = [f"workflow {workflow.name}"]
    if workflow.template is not None:
        header.append(f"  template: {format_template(workflow.template)}")
    if workflow.description is not None:
        header.append(f"  description: {_quote(workflow.description)}")
    lines = header
    if workflow.body:
        lines.append("")
        lines.extend(_body_lines(workflow.body, ""))
    return "\n".join(lines) + "\n"
