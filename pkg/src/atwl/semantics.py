"""Semantic checks: symbol table, assignment alias groups, validity rules.

`check_workflow` enforces the four structural validity constraints —
identifier uniqueness (E001), declared inputs/outputs (E002/E006), exogenous
artifacts never produced (E003), acyclic dataflow modulo assignments (E004) —
plus schema conformance and a handful of advisories. Checking never raises;
findings come back as an ordered, deterministic diagnostic list.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from atwl.diagnostics import Diagnostic, Span, error, warning
from atwl.ontology import REFERENCE_FREE_TYPES, TYPICAL_OUTPUTS, ArtifactType, field_schema, Requiredness
from atwl.syntax.nodes import (
    ArtifactDecl,
    Assignment,
    Conditional,
    ExitDirective,
    LoopDecl,
    TransformDecl,
    Workflow,
    walk_scoped,
)


@dataclass(frozen=True)
class SymbolEntry:
    name: str
    kind: str  # "artifact" | "transform" | "loop"
    node: object
    index: int  # declaration order over all declarations
    span: Span


@dataclass
class SymbolTable:
    """Workflow-global namespace over artifacts, transforms, and loops.

    Loop bodies and conditional branches introduce no scope: a declaration is
    visible everywhere in the file, regardless of relative position.
    """

    entries: dict[str, SymbolEntry] = field(default_factory=dict)
    declarations: list[SymbolEntry] = field(default_factory=list)
    artifact_decls: dict[str, ArtifactDecl] = field(default_factory=dict)

    def get(self, name: str) -> SymbolEntry | None:
        return self.entries.get(name)

    def artifact(self, name: str) -> ArtifactDecl | None:
        """First artifact declaration of this name, even if another kind
        shadows it in the namespace (that situation is already an E001)."""
        return self.artifact_decls.get(name)

    def is_artifact(self, name: str) -> bool:
        return name in self.artifact_decls

    def of_kind(self, kind: str) -> list[SymbolEntry]:
        return [e for e in self.declarations if e.kind == kind]


def build_symbol_table(workflow: Workflow) -> tuple[SymbolTable, list[Diagnostic]]:
    """Collect every declaration at any nesting depth; diagnose duplicates."""
    table = SymbolTable()
    diagnostics: list[Diagnostic] = []
    by_name: dict[str, list[SymbolEntry]] = {}
    index = 0
    for item, _scopes in walk_scoped(workflow.body):
        if isinstance(item, ArtifactDecl):
            kind = "artifact"
        elif isinstance(item, TransformDecl):
            kind = "transform"
        elif isinstance(item, LoopDecl):
            kind = "loop"
        else:
            continue
        entry = SymbolEntry(item.name, kind, item, index, item.span)
        index += 1
        table.declarations.append(entry)
        by_name.setdefault(item.name, []).append(entry)
        if item.name not in table.entries:
            table.entries[item.name] = entry
        if kind == "artifact" and item.name not in table.artifact_decls:
            table.artifact_decls[item.name] = item
    for name, entries in by_name.items():
        if len(entries) > 1:
            related = tuple((e.span, f"{e.kind} {name!r} declared here") for e in entries)
            diagnostics.append(
                error(
                    "E001",
                    entries[0].span,
                    f"identifier {name!r} is declared {len(entries)} times "
                    "(single workflow-global namespace)",
                    related,
                )
            )
    return table, diagnostics


@dataclass
class AliasMap:
    """Partition of artifact identifiers induced by assignment bindings.

    Unassigned artifacts form singleton groups. Each group's canonical
    representative is its first-declared member.
    """

    _rep: dict[str, str] = field(default_factory=dict)
    _groups: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def representative(self, name: str) -> str:
        return self._rep.get(name, name)

    def group(self, name: str) -> tuple[str, ...]:
        return self._groups.get(self.representative(name), (name,))

    def groups(self) -> list[tuple[str, ...]]:
        return sorted(self._groups.values())

    def nontrivial_groups(self) -> list[tuple[str, ...]]:
        return [g for g in self.groups() if len(g) > 1]

    def siblings(self, name: str) -> frozenset[str]:
        return frozenset(self.group(name))


def resolve_assignments(
    workflow: Workflow, table: SymbolTable | None = None
) -> tuple[AliasMap, list[Diagnostic]]:
    """Union assignment bindings into alias groups (connected components)."""
    if table is None:
        table, _ = build_symbol_table(workflow)
    diagnostics: list[Diagnostic] = []
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        parent.setdefault(a, a)
        parent.setdefault(b, b)
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for assignment in workflow.assignments():
        for binding in assignment.bindings:
            ok = True
            for endpoint in (binding.target, binding.source):
                if not table.is_artifact(endpoint):
                    entry = table.get(endpoint)
                    if entry is not None:
                        diagnostics.append(
                            error("E005", binding.span,
                                  f"assignment endpoint {endpoint!r} is a "
                                  f"{entry.kind}, not an artifact")
                        )
                    else:
                        diagnostics.append(
                            error("E005", binding.span,
                                  f"assignment names undeclared artifact {endpoint!r}")
                        )
                    ok = False
            if binding.target == binding.source:
                diagnostics.append(
                    error("E009", binding.span,
                          f"assignment binds {binding.target!r} to itself")
                )
                ok = False
            if ok:
                union(binding.target, binding.source)

    # Canonical representative: the first-declared member of each component.
    components: dict[str, list[str]] = {}
    for name in parent:
        components.setdefault(find(name), []).append(name)
    alias = AliasMap()
    for members in components.values():
        members.sort(key=lambda n: (table.get(n).index if table.get(n) else 1 << 30, n))
        rep = members[0]
        alias._groups[rep] = tuple(members)
        for member in members:
            alias._rep[member] = rep
    # Singleton groups for every other declared artifact.
    for entry in table.of_kind("artifact"):
        if entry.name not in alias._rep:
            alias._rep[entry.name] = entry.name
            alias._groups[entry.name] = (entry.name,)
    return alias, diagnostics


def check_workflow(workflow: Workflow) -> list[Diagnostic]:
    """Run all semantic checks in a fixed order; empty result means valid."""
    diagnostics: list[Diagnostic] = []

    table, dup_diags = build_symbol_table(workflow)
    diagnostics.extend(dup_diags)

    scoped = walk_scoped(workflow.body)
    transforms = [(item, scopes) for item, scopes in scoped if isinstance(item, TransformDecl)]
    artifacts = [(item, scopes) for item, scopes in scoped if isinstance(item, ArtifactDecl)]

    # V2: every input names a declared artifact; outputs likewise (E006).
    # Membership is over artifact declarations: a name declared only as a
    # transform or loop is still undeclared as an artifact.
    def _undeclared(code: str, transform: TransformDecl, name: str, what: str) -> None:
        entry = table.get(name)
        if entry is not None:
            diagnostics.append(
                error(code, transform.span,
                      f"transform {transform.name!r} {what} {name!r} names "
                      f"a {entry.kind}, not an artifact",
                      ((entry.span, f"{name!r} declared here"),))
            )
        else:
            diagnostics.append(
                error(code, transform.span,
                      f"transform {transform.name!r} {what} {name!r} references "
                      "an undeclared artifact")
            )

    for transform, _scopes in transforms:
        for name in transform.inputs:
            if not table.is_artifact(name):
                _undeclared("E002", transform, name, "input")
        for name in transform.outputs:
            if not table.is_artifact(name):
                _undeclared("E006", transform, name, "output")

    alias, alias_diags = resolve_assignments(workflow, table)
    diagnostics.extend(alias_diags)

    # V3: exogenous artifacts are never produced.
    for transform, _scopes in transforms:
        for name in transform.outputs:
            decl = table.artifact(name)
            if decl is not None and decl.origin_given:
                diagnostics.append(
                    error("E003", transform.span,
                          f"transform {transform.name!r} outputs {name!r}, which is "
                          "declared origin: given",
                          ((decl.span, f"{name!r} declared given here"),))
                )

    # V4: dataflow acyclicity, checked only once the graph preconditions hold.
    fatal = {"E001", "E002", "E005", "E006"}
    if not any(d.code in fatal for d in diagnostics):
        from atwl import graph as graph_mod

        dep_graph = graph_mod.build_dependency_graph(workflow, alias)
        for cycle in graph_mod.check_acyclicity(dep_graph):
            names = " -> ".join(cycle.node_names + (cycle.node_names[0],))
            span = table.get(cycle.node_names[0]).span if table.get(cycle.node_names[0]) else workflow.span
            diagnostics.append(
                error("E004", span,
                      f"input-output dependency cycle not sanctioned by an "
                      f"assignment: {names}")
            )

    # Field conformance against the per-type schema.
    for decl, _scopes in artifacts:
        if decl.type is None:
            continue
        if decl.references and decl.type in REFERENCE_FREE_TYPES:
            diagnostics.append(
                error("E012", decl.span,
                      f"artifact type {decl.type.keyword!r} does not admit "
                      "parenthesised references")
            )
        for spec in field_schema(decl.type):
            if spec.requiredness is not Requiredness.REQUIRED:
                continue
            attr = spec.name.replace(" ", "_")
            if getattr(decl, attr, None) is None and spec.name not in decl.present_keys:
                diagnostics.append(
                    error("E010", decl.span,
                          f"artifact {decl.name!r} ({decl.type.keyword}) is missing "
                          f"required field {spec.name!r}")
                )
    for transform, _scopes in transforms:
        for field_name, value in (("intent", transform.intent), ("actor", transform.actor)):
            if value is None and field_name not in transform.present_keys:
                diagnostics.append(
                    error("E010", transform.span,
                          f"transform {transform.name!r} is missing required "
                          f"field {field_name!r}")
                )
        for field_name, value in (("input", transform.inputs), ("output", transform.outputs)):
            if not value:
                diagnostics.append(
                    error("E010", transform.span,
                          f"transform {transform.name!r} has no {field_name} artifacts "
                          f"({field_name} list must be non-empty)")
                )
    for item, _scopes in scoped:
        if isinstance(item, LoopDecl) and not (item.until or "").strip():
            diagnostics.append(
                error("E010", item.span,
                      f"loop {item.name!r} is missing its qualitative stopping "
                      "condition (until)")
            )

    # Parenthesised references and arrangement contexts must be declared.
    for decl, _scopes in artifacts:
        referenced = list(decl.references)
        if decl.context is not None:
            referenced.append(decl.context)
        for name in referenced:
            if table.is_artifact(name):
                continue
            entry = table.get(name)
            if entry is not None:
                diagnostics.append(
                    error("E008", decl.span,
                          f"artifact {decl.name!r} references {name!r}, which is "
                          f"a {entry.kind}, not an artifact")
                )
            else:
                diagnostics.append(
                    error("E008", decl.span,
                          f"artifact {decl.name!r} references undeclared "
                          f"artifact {name!r}")
                )

    # Advisory: output artifact types outside the intent's typical set.
    for transform, _scopes in transforms:
        if transform.intent is None:
            continue
        typical = TYPICAL_OUTPUTS[transform.intent]
        for name in transform.outputs:
            decl = table.artifact(name)
            if decl is not None and decl.type is not None and decl.type not in typical:
                diagnostics.append(
                    warning("W120", transform.span,
                            f"{transform.intent.keyword} typically outputs "
                            f"{_typical_text(typical)}; {name!r} is "
                            f"{decl.type.keyword}")
                )

    # Exit directives must target an enclosing loop.
    for item, scopes in scoped:
        if isinstance(item, ExitDirective):
            enclosing = [frame[1].name for frame in scopes if frame[0] == "loop"]
            if item.loop_name not in enclosing:
                diagnostics.append(
                    error("E007", item.span,
                          f"exit directive targets {item.loop_name!r}, which is not "
                          "an enclosing loop")
                )

    # Informational: an artifact declared in one branch, used from the other
    # branch of the same conditional.
    decl_branches: dict[str, tuple[Conditional, str]] = {}
    for decl, scopes in artifacts:
        for frame in scopes:
            if frame[0] == "branch":
                decl_branches[decl.name] = (frame[1], frame[2])
    for transform, scopes in transforms:
        branches = {(frame[1], frame[2]) for frame in scopes if frame[0] == "branch"}
        for name in (*transform.inputs, *transform.outputs):
            home = decl_branches.get(name)
            if home is None or home in branches:
                continue
            # Same conditional, other branch: a use the language accepts but
            # flags, since only one branch is taken per iteration.
            if any(cond is home[0] for cond, _label in branches):
                use_label = next(label for cond, label in branches if cond is home[0])
                diagnostics.append(
                    warning("W130", transform.span,
                            f"{name!r} is declared in the {home[1]} branch but used "
                            f"in the {use_label} branch")
                )

    # Style: declarations without a description.
    for item, _scopes in scoped:
        if isinstance(item, (ArtifactDecl, TransformDecl)) and item.description is None:
            kind = "artifact" if isinstance(item, ArtifactDecl) else "transform"
            diagnostics.append(
                warning("W102", item.span, f"{kind} {item.name!r} has no description")
            )

    return diagnostics


def _typical_text(typical: frozenset[ArtifactType]) -> str:
    return "/".join(sorted(t.keyword for t in typical))
