"""Cross-workflow structural analyses.

Detectors for the six named building blocks (SP-1..SP-6), a rule-based loop
taxonomy, five-stage meta-structure segmentation, construct coverage rows,
structural signatures with pairwise comparison, and a corpus indexer. All
detectors are pure functions of the dependency graph and control tree; every
block match can be re-validated by an independent checker
(`verify_block_match`) that shares no code with the matcher.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

from atwl.diagnostics import Diagnostic, has_errors
from atwl.graph import (
    ControlTree,
    DependencyGraph,
    build_control_tree,
    build_dependency_graph,
)
from atwl.ontology import Actor, ArtifactType, Intent, InternalStructure
from atwl.semantics import check_workflow, resolve_assignments
from atwl.syntax.nodes import ArtifactDecl, LoopDecl, TransformDecl, Workflow, walk_scoped
from atwl.syntax.parser import parse_file

BLOCK_IDS = ("SP-1", "SP-2", "SP-3", "SP-4", "SP-5", "SP-6")

BLOCK_NAMES = {
    "SP-1": "assessment-driven refinement",
    "SP-2": "knowledge injection",
    "SP-3": "feature-then-cluster",
    "SP-4": "project-and-explore",
    "SP-5": "residual-based refinement",
    "SP-6": "multi-level exploration",
}

_EPISTEMIC = frozenset({ArtifactType.KNOWLEDGE, ArtifactType.SPECIFICATION})
_COMPUTATIONAL_ACTORS = frozenset({Actor.MACHINE, Actor.HYBRID})


@dataclass(frozen=True)
class BlockMatch:
    """One occurrence of a named building block, bound to concrete nodes."""

    block_id: str
    bindings: tuple[tuple[str, str], ...]  # (role, node name), fixed role order
    scope: str  # enclosing loop id, or "root"
    consumed_types: tuple[str, ...]  # type labels entering the block
    produced_types: tuple[str, ...]  # type labels leaving the block

    def binding(self, role: str) -> str | None:
        for r, name in self.bindings:
            if r == role:
                return name
        return None

    @property
    def bound_transforms(self) -> tuple[str, ...]:
        return tuple(n for r, n in self.bindings if not r.startswith("artifact:"))


class _GraphView:
    """Shared lookup tables the detectors work from."""

    def __init__(self, graph: DependencyGraph, tree: ControlTree):
        self.graph = graph
        self.tree = tree
        self.decls: dict[str, ArtifactDecl] = {}
        self.transform_decls: dict[str, TransformDecl] = {}
        for item, _scopes in walk_scoped(tree.workflow.body):
            if isinstance(item, ArtifactDecl):
                self.decls.setdefault(item.name, item)
            elif isinstance(item, TransformDecl):
                self.transform_decls.setdefault(item.name, item)
        self.transforms = list(graph.transform_nodes)
        self.outputs_of: dict[str, list[str]] = {t.name: [] for t in self.transforms}
        self.inputs_of: dict[str, list[str]] = {t.name: [] for t in self.transforms}
        for edge in graph.edges:
            if edge.kind == "output" and edge.source in self.outputs_of:
                self.outputs_of[edge.source].append(edge.target)
            elif edge.kind == "input" and edge.target in self.inputs_of:
                self.inputs_of[edge.target].append(edge.source)

    def mediated(self, upstream: str, downstream: str) -> list[str]:
        """Artifacts by which `upstream` directly feeds `downstream`.

        Direct mediation only: the downstream transform must consume an output
        of the upstream transform or one of its alias-group siblings;
        reachability through further transforms does not count.
        """
        alias = self.graph.alias
        consumed: set[str] = set()
        for name in self.inputs_of.get(downstream, ()):
            consumed.update(alias.siblings(name))
        return sorted(a for a in self.outputs_of.get(upstream, ()) if a in consumed)

    def artifact_type(self, name: str) -> ArtifactType | None:
        decl = self.decls.get(name)
        return decl.type if decl is not None else None

    def type_label(self, name: str) -> str:
        """Type keyword, refined to `entities(grouped)` for grouped entities."""
        decl = self.decls.get(name)
        if decl is None or decl.type is None:
            return "?"
        if (
            decl.type is ArtifactType.ENTITIES
            and decl.internal_structure is InternalStructure.GROUP
        ):
            return "entities(grouped)"
        return decl.type.keyword

    def loop_of(self, transform: str) -> str | None:
        return self.tree.innermost_loop(transform)

    def common_loop(self, names: tuple[str, ...]) -> str:
        chains = [self.tree.enclosing_loops(n) for n in names]
        scope = "root"
        for depth in range(min((len(c) for c in chains), default=0)):
            level = {c[depth] for c in chains}
            if len(level) == 1:
                scope = level.pop()
            else:
                break
        return scope

    def transforms_in_loop(self, loop_name: str):
        members = set(self.tree.members_of_loop(loop_name))
        return [t for t in self.transforms if t.name in members]


def _interface(view: _GraphView, transforms: tuple[str, ...]) -> tuple[tuple[str, ...], tuple[str, ...]]:
    produced: list[str] = []
    consumed: list[str] = []
    for name in transforms:
        produced.extend(view.outputs_of.get(name, ()))
        consumed.extend(view.inputs_of.get(name, ()))
    produced_set = set(produced)
    consumed_set = set(consumed)
    consumed_labels = sorted({view.type_label(a) for a in consumed_set - produced_set})
    produced_labels = sorted({view.type_label(a) for a in produced_set - consumed_set})
    return tuple(consumed_labels), tuple(produced_labels)


def _match(view: _GraphView, block_id: str, bindings: list[tuple[str, str]]) -> BlockMatch:
    transforms = tuple(n for r, n in bindings if not r.startswith("artifact:"))
    consumed, produced = _interface(view, transforms)
    if block_id == "SP-1":
        scope = view.loop_of(bindings[0][1]) or "root"
    elif block_id == "SP-6":
        scope = view.loop_of(bindings[0][1]) or "root"
    else:
        scope = view.common_loop(transforms)
    return BlockMatch(
        block_id=block_id,
        bindings=tuple(bindings),
        scope=scope,
        consumed_types=consumed,
        produced_types=produced,
    )


def match_building_blocks(graph: DependencyGraph, tree: ControlTree) -> list[BlockMatch]:
    """Detect every occurrence of the six building blocks.

    Connectivity between roles is direct artifact mediation (see
    `_GraphView.mediated`). The "machine transform" consuming an updated
    specification in SP-1 admits hybrid actors: computation steered by a human
    is still computation. SP-6's level change has no syntactic marker; the
    detector approximates it as a hybrid-actor visualise inside a loop.
    """
    view = _GraphView(graph, tree)
    matches: list[BlockMatch] = []

    # SP-1: visualise => assess inside a loop, terminated by a conditional exit
    # or fed back via a produced specification that re-parameterises a
    # computational transform of the same loop.
    for loop in tree.loops:
        loop_transforms = view.transforms_in_loop(loop.name)
        exits = any(target == loop.name for _c, _b, target in tree.exit_edges)
        spec_updates: list[tuple[str, str]] = []  # (generate-knowledge, refined)
        for g_node in loop_transforms:
            if g_node.intent is not Intent.GENERATE_KNOWLEDGE:
                continue
            for spec in view.outputs_of.get(g_node.name, ()):
                if view.artifact_type(spec) is not ArtifactType.SPECIFICATION:
                    continue
                siblings = graph.alias.siblings(spec)
                for m_node in loop_transforms:
                    if m_node.actor not in _COMPUTATIONAL_ACTORS:
                        continue
                    if siblings & set(view.inputs_of.get(m_node.name, ())):
                        spec_updates.append((g_node.name, m_node.name))
        spec_updates.sort(
            key=lambda pair: (graph.transform(pair[0]).index, graph.transform(pair[1]).index)
        )
        if not (exits or spec_updates):
            continue
        for v_node in loop_transforms:
            if v_node.intent is not Intent.VISUALISE:
                continue
            for a_node in loop_transforms:
                if a_node.intent is not Intent.ASSESS:
                    continue
                if not view.mediated(v_node.name, a_node.name):
                    continue
                bindings = [("visualise", v_node.name), ("assess", a_node.name)]
                if spec_updates:
                    bindings.append(("spec-update", spec_updates[0][0]))
                    bindings.append(("refined", spec_updates[0][1]))
                matches.append(_match(view, "SP-1", bindings))

    # SP-2: a knowledge or specification artifact with origin: given consumed
    # by any transform.
    for t_node in view.transforms:
        for name in view.inputs_of.get(t_node.name, ()):
            decl = view.decls.get(name)
            if (
                decl is not None
                and decl.origin_given
                and decl.type in _EPISTEMIC
            ):
                matches.append(
                    _match(view, "SP-2",
                           [("consumer", t_node.name), ("artifact:injected", name)])
                )

    # SP-3: characterise => define-unit through a feature artifact.
    for c_node in view.transforms:
        if c_node.intent is not Intent.CHARACTERISE:
            continue
        for d_node in view.transforms:
            if d_node.intent is not Intent.DEFINE_UNIT:
                continue
            features = [
                a for a in view.mediated(c_node.name, d_node.name)
                if view.artifact_type(a) is ArtifactType.FEATURE
            ]
            if features:
                matches.append(
                    _match(view, "SP-3",
                           [("characterise", c_node.name), ("define-unit", d_node.name),
                            ("artifact:feature", features[0])])
                )

    # SP-4: contextualise => visualise => abstract.
    matches.extend(
        _match(view, "SP-4", [("contextualise", a), ("visualise", b), ("abstract", c)])
        for a, b, c in _chains(view, (Intent.CONTEXTUALISE, Intent.VISUALISE, Intent.ABSTRACT))
    )

    # SP-5: build-model => characterise => visualise => assess.
    matches.extend(
        _match(view, "SP-5",
               [("build-model", a), ("characterise", b), ("visualise", c), ("assess", d)])
        for a, b, c, d in _chains(
            view, (Intent.BUILD_MODEL, Intent.CHARACTERISE, Intent.VISUALISE, Intent.ASSESS)
        )
    )

    # SP-6: hybrid-actor visualise => abstract => assess, all inside one loop.
    for v, a, s in _chains(view, (Intent.VISUALISE, Intent.ABSTRACT, Intent.ASSESS)):
        v_node = graph.transform(v)
        loop = view.loop_of(v)
        if v_node.actor is Actor.HYBRID and loop is not None:
            if view.loop_of(a) == loop and view.loop_of(s) == loop:
                matches.append(
                    _match(view, "SP-6", [("visualise", v), ("abstract", a), ("assess", s)])
                )

    matches.sort(key=lambda m: (m.block_id, _binding_index_key(graph, m)))
    return matches


def _binding_index_key(graph: DependencyGraph, match: BlockMatch) -> tuple:
    key = []
    for _role, name in match.bindings:
        node = graph.transform(name) or graph.artifact(name)
        key.append(node.index if node is not None else 1 << 30)
    return tuple(key)


def _chains(view: _GraphView, intents: tuple[Intent, ...]):
    """All transform tuples realizing an intent sequence under direct mediation."""
    def extend(prefix: tuple[str, ...], remaining: tuple[Intent, ...]):
        if not remaining:
            yield prefix
            return
        for node in view.transforms:
            if node.intent is not remaining[0]:
                continue
            if prefix and not view.mediated(prefix[-1], node.name):
                continue
            if node.name in prefix:
                continue
            yield from extend(prefix + (node.name,), remaining[1:])

    yield from extend((), intents)


def verify_block_match(graph: DependencyGraph, tree: ControlTree, match: BlockMatch) -> bool:
    """Independent re-validation of a match; shares no code with the matcher.

    Walks the bound nodes and re-tests intents, actors, direct-mediation
    connectivity, and loop scoping directly against the raw edge list.
    """
    roles = dict(match.bindings)
    transforms = {t.name: t for t in graph.transform_nodes}
    artifacts = {a.name: a for a in graph.artifact_nodes}
    decls = {
        item.name: item
        for item, _s in walk_scoped(tree.workflow.body)
        if isinstance(item, ArtifactDecl)
    }

    def feeds(up: str, down: str) -> bool:
        out_edges = {e.target for e in graph.edges if e.kind == "output" and e.source == up}
        for edge in graph.edges:
            if edge.kind != "input" or edge.target != down:
                continue
            for candidate in graph.alias.group(edge.source):
                if candidate in out_edges:
                    return True
        return False

    def intent_ok(role: str, intent: Intent) -> bool:
        name = roles.get(role)
        return name in transforms and transforms[name].intent is intent

    def in_loop(name: str, loop: str) -> bool:
        return loop in tree.enclosing_loops(name)

    if match.block_id == "SP-1":
        if not (intent_ok("visualise", Intent.VISUALISE) and intent_ok("assess", Intent.ASSESS)):
            return False
        if match.scope == "root" or not in_loop(roles["visualise"], match.scope):
            return False
        if not in_loop(roles["assess"], match.scope):
            return False
        if not feeds(roles["visualise"], roles["assess"]):
            return False
        has_exit = any(t == match.scope for _c, _b, t in tree.exit_edges)
        if "spec-update" in roles:
            if not intent_ok("spec-update", Intent.GENERATE_KNOWLEDGE):
                return False
            refined = roles.get("refined")
            if refined not in transforms or transforms[refined].actor not in _COMPUTATIONAL_ACTORS:
                return False
            if not (in_loop(roles["spec-update"], match.scope) and in_loop(refined, match.scope)):
                return False
            produced_specs = [
                e.target for e in graph.edges
                if e.kind == "output" and e.source == roles["spec-update"]
                and e.target in decls and decls[e.target].type is ArtifactType.SPECIFICATION
            ]
            consumed = {
                sib
                for e in graph.edges
                if e.kind == "input" and e.target == refined
                for sib in graph.alias.group(e.source)
            }
            if not any(s in consumed for s in produced_specs):
                return False
            return True
        return has_exit
    if match.block_id == "SP-2":
        consumer, injected = roles.get("consumer"), roles.get("artifact:injected")
        if consumer not in transforms or injected not in decls:
            return False
        decl = decls[injected]
        if not decl.origin_given or decl.type not in _EPISTEMIC:
            return False
        return any(
            e.kind == "input" and e.source == injected and e.target == consumer
            for e in graph.edges
        )
    if match.block_id == "SP-3":
        if not (intent_ok("characterise", Intent.CHARACTERISE)
                and intent_ok("define-unit", Intent.DEFINE_UNIT)):
            return False
        feature = roles.get("artifact:feature")
        if feature not in decls or decls[feature].type is not ArtifactType.FEATURE:
            return False
        produced = any(
            e.kind == "output" and e.source == roles["characterise"] and e.target == feature
            for e in graph.edges
        )
        consumed = any(
            e.kind == "input" and e.target == roles["define-unit"]
            and feature in graph.alias.group(e.source)
            for e in graph.edges
        )
        return produced and consumed
    if match.block_id in ("SP-4", "SP-5", "SP-6"):
        sequences = {
            "SP-4": (("contextualise", Intent.CONTEXTUALISE), ("visualise", Intent.VISUALISE),
                     ("abstract", Intent.ABSTRACT)),
            "SP-5": (("build-model", Intent.BUILD_MODEL), ("characterise", Intent.CHARACTERISE),
                     ("visualise", Intent.VISUALISE), ("assess", Intent.ASSESS)),
            "SP-6": (("visualise", Intent.VISUALISE), ("abstract", Intent.ABSTRACT),
                     ("assess", Intent.ASSESS)),
        }[match.block_id]
        names = []
        for role, intent in sequences:
            if not intent_ok(role, intent):
                return False
            names.append(roles[role])
        for up, down in zip(names, names[1:]):
            if not feeds(up, down):
                return False
        if match.block_id == "SP-6":
            first = transforms[names[0]]
            if first.actor is not Actor.HYBRID or match.scope == "root":
                return False
            if not all(in_loop(n, match.scope) for n in names):
                return False
        return True
    return False


# -- loop taxonomy ----------------------------------------------------------

CATEGORY_COMPUTATIONAL = "computational refinement"
CATEGORY_EXPLORATORY = "exploratory investigation"
CATEGORY_RESTRUCTURING = "data restructuring"
CATEGORY_MULTI_STEP = "multi-step cycle"


@dataclass(frozen=True)
class LoopEvidence:
    has_assess: bool
    has_exit: bool
    has_spec_update: bool
    restructures_units: bool
    updates_model: bool
    nesting_depth: int
    visualise_actors: tuple[str, ...]
    updated_types: tuple[str, ...]


@dataclass(frozen=True)
class LoopClassification:
    loop_name: str
    category: str
    type_label: str
    evidence: LoopEvidence


def classify_loops(graph: DependencyGraph, tree: ControlTree) -> list[LoopClassification]:
    """Assign each loop exactly one category plus a finer type label.

    Rule order: multi-step cycle (directly nested loops plus model or grouping
    stages), data restructuring (a define-unit's output entities re-bound over
    an upstream artifact), computational refinement (an artifact version
    updated across iterations, or a specification produced and consumed
    in-loop), exploratory investigation otherwise. Within computational
    refinement, the updated artifact type picks the label with precedence
    model-fitting > feature/encoding > specification-guided > parameter-tuning.
    """
    view = _GraphView(graph, tree)
    results: list[LoopClassification] = []
    for loop in tree.loops:
        members = set(tree.members_of_loop(loop.name))
        loop_transforms = view.transforms_in_loop(loop.name)
        intents = {t.intent for t in loop_transforms}

        bindings = [
            b
            for item, _s in walk_scoped(loop.body)
            if hasattr(item, "bindings")
            for b in item.bindings
        ]
        updated_types: list[str] = []
        restructures = False
        for binding in bindings:
            target_decl = view.decls.get(binding.target)
            source_decl = view.decls.get(binding.source)
            decl = target_decl or source_decl
            if decl is not None and decl.type is not None:
                updated_types.append(decl.type.keyword)
            # Restructuring: the new version comes out of an in-loop
            # define-unit and the re-bound name feeds an upstream transform.
            if source_decl is not None and source_decl.type is ArtifactType.ENTITIES:
                producers = [
                    p for p in graph.producers_of(binding.source)
                    if p in members and graph.transform(p) is not None
                    and graph.transform(p).intent is Intent.DEFINE_UNIT
                ]
                if producers:
                    producer_index = min(graph.transform(p).index for p in producers)
                    consumers = [
                        c for c in graph.consumers_of(binding.target)
                        if graph.transform(c) is not None
                        and graph.transform(c).index < producer_index
                    ]
                    if consumers:
                        restructures = True

        spec_produced_consumed = False
        for t_node in loop_transforms:
            for out in view.outputs_of.get(t_node.name, ()):
                if view.artifact_type(out) is not ArtifactType.SPECIFICATION:
                    continue
                if any(
                    c in members for c in graph.consumers_of(out)
                ):
                    spec_produced_consumed = True

        updated_consumed_by_computation = any(
            _group_feeds_computation(graph, view, binding, members)
            for binding in bindings
        )

        direct_children = [i for i in loop.body if isinstance(i, LoopDecl)]
        evidence = LoopEvidence(
            has_assess=Intent.ASSESS in intents,
            has_exit=any(t == loop.name for _c, _b, t in tree.exit_edges),
            has_spec_update="specification" in updated_types or spec_produced_consumed,
            restructures_units=restructures,
            updates_model="model" in updated_types,
            nesting_depth=tree.loop_nesting_depth(loop),
            visualise_actors=tuple(sorted(
                t.actor.keyword for t in loop_transforms
                if t.intent is Intent.VISUALISE and t.actor is not None
            )),
            updated_types=tuple(sorted(set(updated_types))),
        )

        if direct_children and intents & {Intent.BUILD_MODEL, Intent.DEFINE_UNIT}:
            category, label = CATEGORY_MULTI_STEP, "nested-analysis-cycle"
        elif restructures:
            category, label = CATEGORY_RESTRUCTURING, "unit-restructuring"
        elif (updated_types and updated_consumed_by_computation) or spec_produced_consumed:
            category = CATEGORY_COMPUTATIONAL
            if "model" in updated_types:
                label = "model-fitting"
            elif "feature" in updated_types or "entities" in updated_types:
                label = "feature/encoding"
            elif spec_produced_consumed and "specification" not in updated_types:
                label = "specification-guided"
            else:
                label = "parameter-tuning"
        else:
            category, label = CATEGORY_EXPLORATORY, "view-navigation"
        results.append(LoopClassification(loop.name, category, label, evidence))
    return results


def _group_feeds_computation(graph, view, binding, members) -> bool:
    for name in graph.alias.group(binding.target):
        for consumer in graph.consumers_of(name):
            node = graph.transform(consumer)
            if node is not None and node.actor in _COMPUTATIONAL_ACTORS:
                return True
    return False


# -- meta-structure stages ---------------------------------------------------

STAGE_NAMES = {
    1: "representation construction",
    2: "contextualisation",
    3: "iterative analysis",
    4: "pattern recognition",
    5: "knowledge synthesis",
}

_OUT_OF_LOOP_STAGE = {
    Intent.DEFINE_UNIT: 1,
    Intent.CHARACTERISE: 1,
    Intent.CONTEXTUALISE: 2,
    Intent.VISUALISE: 3,
    Intent.ABSTRACT: 4,
    Intent.BUILD_MODEL: 4,
    Intent.GENERATE_KNOWLEDGE: 5,
    Intent.ASSESS: 5,
}

_IN_LOOP_FLAGS = {
    Intent.ABSTRACT: "stage-4-within-loop",
    Intent.GENERATE_KNOWLEDGE: "stage-5-within-loop",
}


@dataclass(frozen=True)
class StageReport:
    stages: tuple[tuple[str, int], ...]  # (transform name, stage), decl order
    flags: tuple[tuple[str, str], ...]  # in-loop pattern/knowledge markers
    presence: frozenset[int]
    ordering_violations: tuple[tuple[int, int], ...]
    entry_mode: str  # "data-centric" | "model-understanding"

    def stage_of(self, transform: str) -> int | None:
        for name, stage in self.stages:
            if name == transform:
                return stage
        return None


def stage_segmentation(workflow: Workflow, graph: DependencyGraph) -> StageReport:
    """Map every transform to one of the five meta-structure stages.

    Any transform inside a loop is stage 3 (the iterative core); in-loop
    abstract and generate-knowledge carry an extra within-loop flag. Outside
    loops the intent decides the stage. Entry mode is model-understanding when
    a model artifact arrives as a given input, data-centric otherwise.
    """
    tree = build_control_tree(workflow)
    stages: list[tuple[str, int]] = []
    flags: list[tuple[str, str]] = []
    for item, scopes in walk_scoped(workflow.body):
        if not isinstance(item, TransformDecl) or item.intent is None:
            continue
        in_loop = any(f[0] == "loop" for f in scopes)
        if in_loop:
            stages.append((item.name, 3))
            flag = _IN_LOOP_FLAGS.get(item.intent)
            if flag:
                flags.append((item.name, flag))
        else:
            stages.append((item.name, _OUT_OF_LOOP_STAGE[item.intent]))

    first_seen: dict[int, int] = {}
    for position, (_name, stage) in enumerate(stages):
        first_seen.setdefault(stage, position)
    ordered = sorted(first_seen, key=first_seen.__getitem__)
    violations = tuple(
        (a, b)
        for i, a in enumerate(ordered)
        for b in ordered[i + 1 :]
        if a > b
    )

    entry_mode = "data-centric"
    for node in graph.artifact_nodes:
        if node.type is ArtifactType.MODEL and node.given:
            entry_mode = "model-understanding"
            break
    return StageReport(
        stages=tuple(stages),
        flags=tuple(flags),
        presence=frozenset(s for _n, s in stages),
        ordering_violations=violations,
        entry_mode=entry_mode,
    )


# -- construct coverage --------------------------------------------------------


@dataclass(frozen=True)
class CoverageRow:
    workflow_id: str
    artifact_types: frozenset[ArtifactType]
    intents: frozenset[Intent]
    loop_count: int
    nested_loops: bool

    def artifact_bits(self) -> tuple[int, ...]:
        return tuple(int(t in self.artifact_types) for t in ArtifactType)

    def intent_bits(self) -> tuple[int, ...]:
        return tuple(int(i in self.intents) for i in Intent)


def construct_coverage(workflow: Workflow) -> CoverageRow:
    """Presence bits for artifact types and intents, plus loop counts."""
    artifact_types = set()
    intents = set()
    loop_count = 0
    nested = False
    for item, scopes in walk_scoped(workflow.body):
        if isinstance(item, ArtifactDecl) and item.type is not None:
            artifact_types.add(item.type)
        elif isinstance(item, TransformDecl) and item.intent is not None:
            intents.add(item.intent)
        elif isinstance(item, LoopDecl):
            loop_count += 1
            if any(f[0] == "loop" for f in scopes):
                nested = True
    return CoverageRow(
        workflow_id=workflow.name,
        artifact_types=frozenset(artifact_types),
        intents=frozenset(intents),
        loop_count=loop_count,
        nested_loops=nested,
    )


def coverage_to_csv(rows: list[CoverageRow]) -> str:
    """CSV mirroring the construct-coverage table columns."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["workflow"]
        + [t.keyword for t in ArtifactType]
        + [i.keyword for i in Intent]
        + ["loops", "nested"]
    )
    for row in rows:
        writer.writerow(
            [row.workflow_id]
            + list(row.artifact_bits())
            + list(row.intent_bits())
            + [row.loop_count, int(row.nested_loops)]
        )
    return buffer.getvalue()


# -- signatures and comparison ---------------------------------------------------


@dataclass(frozen=True)
class Signature:
    """Structural fingerprint used for pairwise comparison."""

    intent_bigrams: tuple[tuple[str, str], ...]  # multiset, sorted
    blocks: frozenset[str]
    loop_categories: tuple[str, ...]  # multiset, sorted
    stage_presence: frozenset[int]


def compute_signature(
    graph: DependencyGraph,
    blocks: list[BlockMatch],
    loops: list[LoopClassification],
    stages: StageReport,
) -> Signature:
    view_inputs: dict[str, set[str]] = {}
    alias = graph.alias
    for edge in graph.input_edges():
        view_inputs.setdefault(edge.target, set()).update(alias.siblings(edge.source))
    bigrams: list[tuple[str, str]] = []
    for producer in graph.transform_nodes:
        outputs = {
            e.target for e in graph.edges if e.kind == "output" and e.source == producer.name
        }
        if not outputs or producer.intent is None:
            continue
        for consumer in graph.transform_nodes:
            if consumer.name == producer.name or consumer.intent is None:
                continue
            if outputs & view_inputs.get(consumer.name, set()):
                bigrams.append((producer.intent.keyword, consumer.intent.keyword))
    return Signature(
        intent_bigrams=tuple(sorted(bigrams)),
        blocks=frozenset(m.block_id for m in blocks),
        loop_categories=tuple(sorted(c.category for c in loops)),
        stage_presence=stages.presence,
    )


@dataclass(frozen=True)
class SimilarityReport:
    shared_blocks: tuple[str, ...]
    shared_bigrams: tuple[tuple[str, str], ...]
    jaccards: tuple[tuple[str, float | None], ...]  # per component; None = both empty
    score: float

    def jaccard(self, component: str) -> float | None:
        for name, value in self.jaccards:
            if name == component:
                return value
        return None


def _multiset_jaccard(a: tuple, b: tuple) -> float | None:
    if not a and not b:
        return None
    counts_a: dict = {}
    counts_b: dict = {}
    for x in a:
        counts_a[x] = counts_a.get(x, 0) + 1
    for x in b:
        counts_b[x] = counts_b.get(x, 0) + 1
    keys = set(counts_a) | set(counts_b)
    inter = sum(min(counts_a.get(k, 0), counts_b.get(k, 0)) for k in keys)
    union = sum(max(counts_a.get(k, 0), counts_b.get(k, 0)) for k in keys)
    return inter / union


def _set_jaccard(a: frozenset, b: frozenset) -> float | None:
    if not a and not b:
        return None
    return len(a & b) / len(a | b)


def compare_workflows(a: Signature, b: Signature) -> SimilarityReport:
    """Symmetric structural similarity: mean of per-component Jaccards.

    A component empty on both sides carries no signal and is excluded from the
    mean; if every component is empty the workflows are identically empty and
    score 1.0.
    """
    jaccards = (
        ("intent_bigrams", _multiset_jaccard(a.intent_bigrams, b.intent_bigrams)),
        ("blocks", _set_jaccard(a.blocks, b.blocks)),
        ("loop_categories", _multiset_jaccard(a.loop_categories, b.loop_categories)),
        ("stage_presence", _set_jaccard(a.stage_presence, b.stage_presence)),
    )
    informative = [v for _n, v in jaccards if v is not None]
    score = sum(informative) / len(informative) if informative else 1.0
    return SimilarityReport(
        shared_blocks=tuple(sorted(a.blocks & b.blocks)),
        shared_bigrams=tuple(sorted(set(a.intent_bigrams) & set(b.intent_bigrams))),
        jaccards=jaccards,
        score=score,
    )


# -- whole-workflow analysis and corpus indexing -----------------------------------


@dataclass
class WorkflowAnalysis:
    workflow: Workflow
    graph: DependencyGraph
    tree: ControlTree
    blocks: list[BlockMatch]
    loop_classes: list[LoopClassification]
    stage_report: StageReport
    coverage: CoverageRow
    signature: Signature
    template_report: object | None = None


def analyze_workflow(workflow: Workflow) -> WorkflowAnalysis:
    """Run the full analysis stack over a validated workflow."""
    from atwl.graph import compare_template, extract_intent_chain

    alias, _diags = resolve_assignments(workflow)
    graph = build_dependency_graph(workflow, alias)
    tree = build_control_tree(workflow)
    blocks = match_building_blocks(graph, tree)
    loops = classify_loops(graph, tree)
    stages = stage_segmentation(workflow, graph)
    coverage = construct_coverage(workflow)
    signature = compute_signature(graph, blocks, loops, stages)
    template_report = None
    if workflow.template is not None:
        template_report = compare_template(workflow.template, extract_intent_chain(workflow))
    return WorkflowAnalysis(
        workflow=workflow,
        graph=graph,
        tree=tree,
        blocks=blocks,
        loop_classes=loops,
        stage_report=stages,
        coverage=coverage,
        signature=signature,
        template_report=template_report,
    )


@dataclass
class CorpusEntry:
    workflow_id: str
    path: str
    error_count: int
    warning_count: int
    codes: tuple[str, ...]
    coverage: CoverageRow | None = None
    signature: Signature | None = None
    blocks: tuple[BlockMatch, ...] = ()
    analysis: WorkflowAnalysis | None = None

    @property
    def ok(self) -> bool:
        return self.error_count == 0 and self.signature is not None


@dataclass
class CorpusIndex:
    entries: dict[str, CorpusEntry] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def coverage_rows(self) -> list[CoverageRow]:
        return [e.coverage for e in self.entries.values() if e.coverage is not None]


def scan_corpus(paths, parallel: bool = True) -> CorpusIndex:
    """Parse and analyze a set of files into an index.

    Files are analyzed in parallel but assembled in lexicographic path order,
    so the index is deterministic. Files with error diagnostics get an entry
    carrying the diagnostics summary and no signature; unreadable files are
    recorded with an `io-error` marker. Nothing a single file does can abort
    the scan.
    """
    ordered = sorted(str(p) for p in paths)
    if parallel and len(ordered) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=min(8, len(ordered))) as pool:
            entries = list(pool.map(_scan_one, ordered))
    else:
        entries = [_scan_one(path) for path in ordered]
    index = CorpusIndex()
    for entry in entries:
        key = entry.workflow_id
        suffix = 2
        while key in index.entries:
            key = f"{entry.workflow_id}#{suffix}"
            suffix += 1
        index.entries[key] = entry
    return index


def _scan_one(path: str) -> CorpusEntry:
    stem = Path(path).stem
    try:
        result = parse_file(path)
    except OSError as exc:
        return CorpusEntry(
            workflow_id=stem, path=path, error_count=1, warning_count=0,
            codes=("io-error",),
        )
    diagnostics: list[Diagnostic] = list(result.diagnostics)
    workflow = result.workflow
    if workflow is not None:
        diagnostics.extend(check_workflow(workflow))
    errors = sum(1 for d in diagnostics if d.is_error)
    warnings = sum(1 for d in diagnostics if not d.is_error)
    codes = tuple(sorted({d.code for d in diagnostics}))
    workflow_id = workflow.name if workflow is not None and workflow.name else stem
    entry = CorpusEntry(
        workflow_id=workflow_id, path=path,
        error_count=errors, warning_count=warnings, codes=codes,
    )
    if workflow is not None and errors == 0:
        analysis = analyze_workflow(workflow)
        entry.coverage = analysis.coverage
        entry.signature = analysis.signature
        entry.blocks = tuple(analysis.blocks)
        entry.analysis = analysis
    elif workflow is not None:
        entry.coverage = construct_coverage(workflow)
    return entry


def query_blocks(
    index: CorpusIndex,
    block_id: str | None = None,
    consumes: tuple[str, ...] = (),
    produces: tuple[str, ...] = (),
) -> list[tuple[str, BlockMatch]]:
    """Filter indexed matches by block id and/or interface type labels."""
    if block_id is not None and block_id not in BLOCK_IDS:
        raise ValueError(
            f"unknown block id {block_id!r}; expected one of {', '.join(BLOCK_IDS)}"
        )
    hits: list[tuple[str, BlockMatch]] = []
    for workflow_id, entry in index.entries.items():
        for match in entry.blocks:
            if block_id is not None and match.block_id != block_id:
                continue
            if consumes and not set(consumes) <= set(match.consumed_types):
                continue
            if produces and not set(produces) <= set(match.produced_types):
                continue
            hits.append((workflow_id, match))
    return hits
