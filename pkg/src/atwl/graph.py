"""Typed dependency graph, control tree, cycle check, and template extraction.

The dependency graph is bipartite: artifact and transform nodes joined by
input edges (artifact -> transform) and output edges (transform -> artifact),
plus reference edges (artifact -> artifact, from parenthesised references).
Cycle checking runs over input/output edges only; assignment bindings add no
edges, which is exactly how re-binding inside loops stays exempt from the
acyclicity rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from atwl.ontology import Actor, ArtifactType, Intent
from atwl.semantics import AliasMap
from atwl.syntax.nodes import (
    ArtifactDecl,
    Conditional,
    ExitDirective,
    IntentStep,
    LoopDecl,
    LoopStep,
    TemplateChain,
    TransformDecl,
    Workflow,
    walk_scoped,
)

MAX_REPORTED_CYCLES = 10


@dataclass(frozen=True)
class ArtifactNode:
    name: str
    type: ArtifactType | None
    given: bool
    index: int


@dataclass(frozen=True)
class TransformNode:
    name: str
    intent: Intent | None
    actor: Actor | None
    index: int


@dataclass(frozen=True)
class Edge:
    kind: str  # "input" | "output" | "reference"
    source: str
    target: str
    feedback: bool = False


@dataclass
class DependencyGraph:
    artifact_nodes: list[ArtifactNode] = field(default_factory=list)
    transform_nodes: list[TransformNode] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    alias: AliasMap = field(default_factory=AliasMap)
    _artifacts_by_name: dict[str, ArtifactNode] = field(default_factory=dict)
    _transforms_by_name: dict[str, TransformNode] = field(default_factory=dict)

    def artifact(self, name: str) -> ArtifactNode | None:
        return self._artifacts_by_name.get(name)

    def transform(self, name: str) -> TransformNode | None:
        return self._transforms_by_name.get(name)

    def input_edges(self) -> list[Edge]:
        return [e for e in self.edges if e.kind == "input"]

    def output_edges(self) -> list[Edge]:
        return [e for e in self.edges if e.kind == "output"]

    def reference_edges(self) -> list[Edge]:
        return [e for e in self.edges if e.kind == "reference"]

    def producers_of(self, artifact: str) -> list[str]:
        return [e.source for e in self.edges if e.kind == "output" and e.target == artifact]

    def consumers_of(self, artifact: str) -> list[str]:
        return [e.target for e in self.edges if e.kind == "input" and e.source == artifact]


def build_dependency_graph(workflow: Workflow, alias: AliasMap) -> DependencyGraph:
    """One node per declaration, edges in declaration order.

    Expects a workflow free of E001/E002/E005/E006; edges whose endpoint is
    not a declared node are skipped defensively rather than fabricated.
    """
    graph = DependencyGraph(alias=alias)
    index = 0
    order: list[tuple[str, object]] = []
    for item, _scopes in walk_scoped(workflow.body):
        if isinstance(item, ArtifactDecl):
            node = ArtifactNode(item.name, item.type, item.origin_given, index)
            graph.artifact_nodes.append(node)
            graph._artifacts_by_name.setdefault(item.name, node)
            order.append(("artifact", item))
            index += 1
        elif isinstance(item, TransformDecl):
            node = TransformNode(item.name, item.intent, item.actor, index)
            graph.transform_nodes.append(node)
            graph._transforms_by_name.setdefault(item.name, node)
            order.append(("transform", item))
            index += 1

    for kind, item in order:
        if kind == "transform":
            for name in item.inputs:
                if graph.artifact(name) is not None:
                    graph.edges.append(Edge("input", name, item.name))
            for name in item.outputs:
                if graph.artifact(name) is not None:
                    graph.edges.append(Edge("output", item.name, name))
        else:
            for name in item.references:
                if graph.artifact(name) is not None:
                    graph.edges.append(Edge("reference", item.name, name))

    # Feedback marking: a produced artifact whose alias-group representative
    # already feeds an earlier transform closes an iteration back-channel.
    first_consumption: dict[str, int] = {}
    for edge in graph.edges:
        if edge.kind != "input":
            continue
        rep = alias.representative(edge.source)
        consumer = graph.transform(edge.target)
        if consumer is not None:
            prev = first_consumption.get(rep)
            if prev is None or consumer.index < prev:
                first_consumption[rep] = consumer.index
    for i, edge in enumerate(graph.edges):
        if edge.kind != "output":
            continue
        producer = graph.transform(edge.source)
        rep = alias.representative(edge.target)
        consumed_at = first_consumption.get(rep)
        if producer is not None and consumed_at is not None and consumed_at < producer.index:
            graph.edges[i] = Edge("output", edge.source, edge.target, feedback=True)
    return graph


@dataclass(frozen=True)
class Cycle:
    """An elementary cycle, listed from its first-declared node."""

    node_names: tuple[str, ...]


def check_acyclicity(graph: DependencyGraph) -> list[Cycle]:
    """Enumerate elementary cycles over input/output edges.

    Reference edges never participate. Assignments contribute no edges, so a
    loop that re-binds an artifact version (`X := X'`) is acyclic here by
    construction; only genuine dataflow cycles are reported. Enumeration is
    bounded to the first MAX_REPORTED_CYCLES cycles, found in deterministic
    declaration order (each cycle is reported rooted at its lowest-index node).
    """
    node_index: dict[str, int] = {}
    for node in (*graph.artifact_nodes, *graph.transform_nodes):
        node_index.setdefault(node.name, node.index)
    successors: dict[str, list[str]] = {name: [] for name in node_index}
    for edge in graph.edges:
        if edge.kind in ("input", "output"):
            successors[edge.source].append(edge.target)
    for name in successors:
        successors[name].sort(key=node_index.__getitem__)

    cycles: list[Cycle] = []
    ordered = sorted(node_index, key=node_index.__getitem__)
    for root in ordered:
        if len(cycles) >= MAX_REPORTED_CYCLES:
            break
        root_index = node_index[root]
        path: list[str] = [root]
        on_path = {root}

        def dfs(node: str) -> None:
            if len(cycles) >= MAX_REPORTED_CYCLES:
                return
            for nxt in successors[node]:
                if node_index[nxt] < root_index:
                    continue  # cycles through lower nodes are rooted there
                if nxt == root:
                    cycles.append(Cycle(tuple(path)))
                    if len(cycles) >= MAX_REPORTED_CYCLES:
                        return
                elif nxt not in on_path:
                    path.append(nxt)
                    on_path.add(nxt)
                    dfs(nxt)
                    on_path.discard(nxt)
                    path.pop()

        dfs(root)
    return cycles


@dataclass
class ControlTree:
    """Scope structure: which loop/branch each declaration sits in."""

    workflow: Workflow
    scopes: dict[str, tuple] = field(default_factory=dict)  # name -> scope chain
    loops: list[LoopDecl] = field(default_factory=list)
    exit_edges: list[tuple[Conditional, str, str]] = field(default_factory=list)

    def enclosing_loops(self, name: str) -> tuple[str, ...]:
        return tuple(f[1].name for f in self.scopes.get(name, ()) if f[0] == "loop")

    def innermost_loop(self, name: str) -> str | None:
        loops = self.enclosing_loops(name)
        return loops[-1] if loops else None

    def in_loop(self, name: str) -> bool:
        return bool(self.enclosing_loops(name))

    def members_of_loop(self, loop_name: str) -> list[str]:
        """Declaration names scoped inside a loop, at any depth, in order."""
        return [
            name
            for name, scopes in self.scopes.items()
            if any(f[0] == "loop" and f[1].name == loop_name for f in scopes)
        ]

    def loop_nesting_depth(self, loop: LoopDecl) -> int:
        inner = [i for i, _s in walk_scoped(loop.body) if isinstance(i, LoopDecl)]
        if not inner:
            return 1
        return 1 + max(self.loop_nesting_depth(child) for child in inner)


def build_control_tree(workflow: Workflow) -> ControlTree:
    tree = ControlTree(workflow=workflow)
    for item, scopes in walk_scoped(workflow.body):
        if isinstance(item, (ArtifactDecl, TransformDecl, LoopDecl)):
            tree.scopes.setdefault(item.name, scopes)
        if isinstance(item, LoopDecl):
            tree.loops.append(item)
        if isinstance(item, ExitDirective):
            branch = next(
                (f for f in reversed(scopes) if f[0] == "branch"), None
            )
            if branch is not None:
                tree.exit_edges.append((branch[1], branch[2], item.loop_name))
    return tree


# -- intent chains ------------------------------------------------------------


def extract_intent_chain(workflow: Workflow) -> TemplateChain:
    """Linearize transforms, in declaration order, into an intent chain.

    Consecutive duplicate intents collapse into one step; loops become nested
    `loop(...)` steps (same rule applied recursively); a conditional's then
    branch contributes inline to the enclosing chain, the else branch does not.
    """
    return TemplateChain(steps=tuple(_chain_steps(workflow.body)))


def _chain_steps(items) -> list:
    steps: list = []

    def add_intent(intent: Intent) -> None:
        if steps and isinstance(steps[-1], IntentStep) and steps[-1].intent is intent:
            return
        steps.append(IntentStep(intent=intent, annotation=None))

    for item in items:
        if isinstance(item, TransformDecl):
            if item.intent is not None:
                add_intent(item.intent)
        elif isinstance(item, LoopDecl):
            inner = _chain_steps(item.body)
            if inner:
                steps.append(LoopStep(chain=TemplateChain(steps=tuple(inner))))
        elif isinstance(item, Conditional):
            for step in _chain_steps(item.then_branch):
                if isinstance(step, IntentStep):
                    add_intent(step.intent)
                else:
                    steps.append(step)
    return steps


@dataclass(frozen=True)
class TemplateReport:
    declared: TemplateChain
    extracted: TemplateChain
    verdict: str  # "match" | "partial" | "mismatch"
    notes: tuple[str, ...] = ()


def _strip_annotations(chain: TemplateChain) -> TemplateChain:
    steps = []
    for step in chain.steps:
        if isinstance(step, IntentStep):
            steps.append(IntentStep(intent=step.intent, annotation=None))
        else:
            steps.append(LoopStep(chain=_strip_annotations(step.chain)))
    return TemplateChain(steps=tuple(steps))


def flatten_chain(chain: TemplateChain) -> list[str]:
    """Token sequence with explicit loop markers, for subsequence alignment."""
    tokens: list[str] = []
    for step in chain.steps:
        if isinstance(step, IntentStep):
            tokens.append(step.intent.keyword)
        else:
            tokens.append("loop(")
            tokens.extend(flatten_chain(step.chain))
            tokens.append(")")
    return tokens


def _is_subsequence(needle: list[str], haystack: list[str]) -> bool:
    it = iter(haystack)
    return all(any(tok == h for h in it) for tok in needle)


def compare_template(declared: TemplateChain, extracted: TemplateChain) -> TemplateReport:
    """Advisory comparison of a declared template against the extraction.

    match: equal step by step (annotations ignored). partial: the declared
    chain is a subsequence of the extracted one (authors may elide steps the
    extraction surfaces). mismatch: anything else. Never an error.
    """
    declared_norm = _strip_annotations(declared)
    extracted_norm = _strip_annotations(extracted)
    if declared_norm == extracted_norm:
        return TemplateReport(declared, extracted, "match")
    declared_tokens = flatten_chain(declared_norm)
    extracted_tokens = flatten_chain(extracted_norm)
    if _is_subsequence(declared_tokens, extracted_tokens):
        extra = len(extracted_tokens) - len(declared_tokens)
        return TemplateReport(
            declared, extracted, "partial",
            (f"declared chain is a subsequence of the extraction "
             f"({extra} extracted token(s) not declared)",),
        )
    divergence = next(
        (i for i, (a, b) in enumerate(zip(declared_tokens, extracted_tokens)) if a != b),
        min(len(declared_tokens), len(extracted_tokens)),
    )
    return TemplateReport(
        declared, extracted, "mismatch",
        (f"first divergence at step {divergence + 1}",),
    )
