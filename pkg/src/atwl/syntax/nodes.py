"""AST node types for parsed workflows.

Nodes are frozen dataclasses; source spans participate in identity printing
but are excluded from equality, so two parses of equivalent text compare
equal regardless of layout ("AST equality modulo spans").
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from atwl.diagnostics import Span
from atwl.ontology import (
    Actor,
    ArtifactType,
    Embedment,
    Intent,
    InternalStructure,
    ValueStructure,
    ValueType,
)

# Declaration identifiers: a letter or underscore, word characters, then any
# number of trailing primes. X and X' are distinct identifiers.
IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*'*\Z")

# Workflow header ids additionally allow interior hyphens (`cluster-calendar`).
WORKFLOW_ID_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_-]*'*\Z")


def is_identifier(text: str) -> bool:
    return bool(IDENTIFIER_RE.match(text))


def is_workflow_id(text: str) -> bool:
    return bool(WORKFLOW_ID_RE.match(text))


_NO_SPAN = Span(0, 0, 0, 0)


@dataclass(frozen=True)
class UnknownField:
    """A field key the schema does not know; preserved verbatim."""

    key: str
    value: str
    span: Span = field(compare=False, default=_NO_SPAN)


@dataclass(frozen=True)
class FeatureDecl:
    """One item of an entities artifact's `features:` list."""

    name: str
    value_structure: ValueStructure | None = None
    value_type: frozenset[ValueType] | None = None
    description: str | None = None
    unknown_fields: tuple[UnknownField, ...] = ()
    span: Span = field(compare=False, default=_NO_SPAN)
    present_keys: frozenset[str] = field(compare=False, default=frozenset())


@dataclass(frozen=True)
class ArtifactDecl:
    name: str
    type: ArtifactType | None
    references: tuple[str, ...] = ()
    origin_given: bool = False
    internal_structure: InternalStructure | None = None
    embedment: frozenset[Embedment] | None = None
    features: tuple[FeatureDecl, ...] = ()
    value_structure: ValueStructure | None = None
    value_type: frozenset[ValueType] | None = None
    representation_form: str | None = None
    model_type: str | None = None
    context: str | None = None
    principle: str | None = None
    layout: str | None = None
    form: str | None = None
    encoding: str | None = None
    description: str | None = None
    unknown_fields: tuple[UnknownField, ...] = ()
    span: Span = field(compare=False, default=_NO_SPAN)
    present_keys: frozenset[str] = field(compare=False, default=frozenset())


@dataclass(frozen=True)
class TransformDecl:
    name: str
    intent: Intent | None = None
    manner: str | None = None
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    actor: Actor | None = None
    description: str | None = None
    unknown_fields: tuple[UnknownField, ...] = ()
    span: Span = field(compare=False, default=_NO_SPAN)
    present_keys: frozenset[str] = field(compare=False, default=frozenset())


@dataclass(frozen=True)
class ExitDirective:
    """`exit loop <ID>`; legal only inside conditional branches."""

    loop_name: str
    span: Span = field(compare=False, default=_NO_SPAN)


@dataclass(frozen=True)
class Binding:
    target: str
    source: str
    span: Span = field(compare=False, default=_NO_SPAN)


@dataclass(frozen=True)
class Assignment:
    bindings: tuple[Binding, ...]
    span: Span = field(compare=False, default=_NO_SPAN)


@dataclass(frozen=True)
class Conditional:
    condition: str
    then_branch: tuple["BodyItem", ...] = ()
    else_branch: tuple["BodyItem", ...] | None = None
    span: Span = field(compare=False, default=_NO_SPAN)


@dataclass(frozen=True)
class LoopDecl:
    name: str
    until: str | None = None
    purpose: str | None = None
    body: tuple["BodyItem", ...] = ()
    span: Span = field(compare=False, default=_NO_SPAN)


BodyItem = Union[ArtifactDecl, TransformDecl, LoopDecl, Conditional, Assignment, ExitDirective]


@dataclass(frozen=True)
class IntentStep:
    """A template step: one intent, optionally with a parenthesised annotation."""

    intent: Intent
    annotation: str | None = None


@dataclass(frozen=True)
class LoopStep:
    """A template step wrapping an iterated sub-chain: `loop(a -> b)`."""

    chain: "TemplateChain"


TemplateStep = Union[IntentStep, LoopStep]


@dataclass(frozen=True)
class TemplateChain:
    steps: tuple[TemplateStep, ...]

    def __bool__(self) -> bool:
        return bool(self.steps)


@dataclass(frozen=True)
class Workflow:
    name: str
    template: TemplateChain | None = None
    description: str | None = None
    body: tuple[BodyItem, ...] = ()
    span: Span = field(compare=False, default=_NO_SPAN)

    def artifacts(self) -> list[ArtifactDecl]:
        """All artifact declarations, at any nesting depth, declaration order."""
        return [d for d in walk_items(self.body) if isinstance(d, ArtifactDecl)]

    def transforms(self) -> list[TransformDecl]:
        return [d for d in walk_items(self.body) if isinstance(d, TransformDecl)]

    def loops(self) -> list[LoopDecl]:
        return [d for d in walk_items(self.body) if isinstance(d, LoopDecl)]

    def conditionals(self) -> list[Conditional]:
        return [d for d in walk_items(self.body) if isinstance(d, Conditional)]

    def assignments(self) -> list[Assignment]:
        return [d for d in walk_items(self.body) if isinstance(d, Assignment)]


def walk_items(items: tuple[BodyItem, ...]) -> list[BodyItem]:
    """Flatten a body to declaration order, descending into loops and branches."""
    out: list[BodyItem] = []
    for item in items:
        out.append(item)
        if isinstance(item, LoopDecl):
            out.extend(walk_items(item.body))
        elif isinstance(item, Conditional):
            out.extend(walk_items(item.then_branch))
            if item.else_branch is not None:
                out.extend(walk_items(item.else_branch))
    return out


# A scope frame is ("loop", LoopDecl) or ("branch", Conditional, "then"|"else").
ScopeFrame = tuple

def walk_scoped(
    items: tuple[BodyItem, ...], scopes: tuple[ScopeFrame, ...] = ()
) -> list[tuple[BodyItem, tuple[ScopeFrame, ...]]]:
    """Like walk_items, but pairs each item with its enclosing scope chain."""
    out: list[tuple[BodyItem, tuple[ScopeFrame, ...]]] = []
    for item in items:
        out.append((item, scopes))
        if isinstance(item, LoopDecl):
            out.extend(walk_scoped(item.body, scopes + (("loop", item),)))
        elif isinstance(item, Conditional):
            out.extend(walk_scoped(item.then_branch, scopes + (("branch", item, "then"),)))
            if item.else_branch is not None:
                out.extend(walk_scoped(item.else_branch, scopes + (("branch", item, "else"),)))
    return out
