"""Seeded random workflow generators for property and oracle tests.

Two flavours: `valid_workflow` builds well-formed ASTs (unique names, declared
references, acyclic dataflow by construction) for round-trip testing;
`oracle_workflow` deliberately produces flawed sources (duplicates, dangling
references, possible cycles) for comparing the checker against independent
oracles.
"""

from __future__ import annotations

import random

from atwl.ontology import (
    Actor,
    ArtifactType,
    Embedment,
    Intent,
    InternalStructure,
    ValueStructure,
    ValueType,
)
from atwl.syntax.nodes import (
    ArtifactDecl,
    Assignment,
    Binding,
    Conditional,
    ExitDirective,
    FeatureDecl,
    IntentStep,
    LoopDecl,
    LoopStep,
    TemplateChain,
    TransformDecl,
    UnknownField,
    Workflow,
)

_WORDS = (
    "daily", "profile", "cluster", "event", "pattern", "grid", "axis",
    "colour", "judgment", "context", "refine", "measure", "series", "group",
)


def _text(rng: random.Random, max_words: int = 6) -> str:
    words = [rng.choice(_WORDS) for _ in range(rng.randint(1, max_words))]
    if rng.random() < 0.3:
        words.insert(rng.randrange(len(words)), "x: y,")
    if rng.random() < 0.2:
        words.append("(a-b)")
    return " ".join(words)


def _name(rng: random.Random, prefix: str, used: set[str]) -> str:
    while True:
        candidate = f"{prefix}_{rng.randint(0, 9999)}"
        if rng.random() < 0.15:
            candidate += "'"
        if candidate not in used:
            used.add(candidate)
            return candidate


def _feature(rng: random.Random, used: set[str]) -> FeatureDecl:
    value_type = None
    if rng.random() < 0.7:
        value_type = frozenset(rng.sample(list(ValueType), rng.randint(1, 2)))
    return FeatureDecl(
        name=_name(rng, "f", used),
        value_structure=rng.choice(list(ValueStructure)),
        value_type=value_type,
        description=_text(rng) if rng.random() < 0.6 else None,
    )


def _artifact(
    rng: random.Random,
    used: set[str],
    declared: list[tuple[str, ArtifactType]],
    given_ok: bool = True,
    name: str | None = None,
) -> ArtifactDecl:
    choices = list(ArtifactType)
    if not any(t is ArtifactType.ENTITIES for _n, t in declared):
        choices.remove(ArtifactType.ARRANGEMENT)  # no legal context target yet
    artifact_type = rng.choice(choices)
    if name is None:
        name = _name(rng, "a", used)
    references: tuple[str, ...] = ()
    if artifact_type not in (ArtifactType.ENTITIES, ArtifactType.SPECIFICATION):
        candidates = [n for n, _t in declared]
        if candidates and rng.random() < 0.7:
            references = tuple(
                rng.sample(candidates, min(len(candidates), rng.randint(1, 2)))
            )
    fields: dict = {}
    if artifact_type is ArtifactType.ENTITIES:
        fields["internal_structure"] = rng.choice(list(InternalStructure))
        if rng.random() < 0.6:
            fields["embedment"] = frozenset(
                rng.sample(list(Embedment), rng.randint(1, 3))
            )
        if rng.random() < 0.4:
            fields["features"] = tuple(_feature(rng, used) for _ in range(rng.randint(1, 2)))
    elif artifact_type is ArtifactType.FEATURE:
        fields["value_structure"] = rng.choice(list(ValueStructure))
        if rng.random() < 0.5:
            fields["value_type"] = frozenset(rng.sample(list(ValueType), rng.randint(1, 2)))
    elif artifact_type is ArtifactType.ARRANGEMENT:
        entities = [n for n, t in declared if t is ArtifactType.ENTITIES]
        fields["context"] = rng.choice(entities)
        fields["principle"] = _text(rng)
    elif artifact_type is ArtifactType.VISUALISATION:
        fields["layout"] = _text(rng, 3)
        fields["form"] = _text(rng, 3)
        if rng.random() < 0.5:
            fields["encoding"] = _text(rng)
    elif artifact_type is ArtifactType.MODEL:
        fields["model_type"] = _text(rng, 2)
    else:  # pattern, knowledge, specification
        fields["representation_form"] = _text(rng, 3)
    unknown = ()
    if rng.random() < 0.15:
        unknown = (UnknownField("extra note", _text(rng, 3)),)
    origin_given = given_ok and rng.random() < 0.3
    return ArtifactDecl(
        name=name,
        type=artifact_type,
        references=references,
        origin_given=origin_given,
        description=_text(rng) if rng.random() < 0.7 else None,
        unknown_fields=unknown,
        **fields,
    )


def _transform(
    rng: random.Random,
    used: set[str],
    inputs: list[str],
    outputs: list[str],
) -> TransformDecl:
    return TransformDecl(
        name=_name(rng, "t", used),
        intent=rng.choice(list(Intent)),
        manner=_text(rng) if rng.random() < 0.5 else None,
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        actor=rng.choice(list(Actor)),
        description=_text(rng) if rng.random() < 0.6 else None,
    )


def _body(
    rng: random.Random,
    used: set[str],
    declared: list[tuple[str, ArtifactType]],
    budget: int,
    loop_stack: tuple[str, ...],
    depth: int,
) -> list:
    items: list = []
    while budget > 0:
        roll = rng.random()
        if roll < 0.42:
            artifact = _artifact(rng, used, declared)
            declared.append((artifact.name, artifact.type))
            items.append(artifact)
            budget -= 1
        elif roll < 0.78:
            consumable = [n for n, _t in declared]
            if not consumable:
                budget -= 1
                continue
            ins = rng.sample(consumable, min(len(consumable), rng.randint(1, 3)))
            outs = []
            for _ in range(rng.randint(1, 2)):
                out = _artifact(rng, used, declared, given_ok=False)
                declared.append((out.name, out.type))
                outs.append(out)
            transform = _transform(rng, used, ins, [o.name for o in outs])
            # Outputs may be declared before or after their producer.
            if rng.random() < 0.5:
                items.extend(outs)
                items.append(transform)
            else:
                items.append(transform)
                items.extend(outs)
            budget -= 1 + len(outs)
        elif roll < 0.86 and depth < 2:
            loop_name = _name(rng, "L", used)
            inner = _body(
                rng, used, declared, rng.randint(1, max(1, budget - 1)),
                loop_stack + (loop_name,), depth + 1,
            )
            items.append(LoopDecl(
                name=loop_name,
                purpose=_text(rng) if rng.random() < 0.5 else None,
                until=_text(rng),
                body=tuple(inner),
            ))
            budget -= 1 + len(inner)
        elif roll < 0.93 and declared:
            then_items = _body(rng, used, declared, 1, loop_stack, depth + 1)
            else_items = None
            if loop_stack and rng.random() < 0.6:
                else_items = (ExitDirective(loop_name=rng.choice(loop_stack)),)
            elif rng.random() < 0.4:
                else_items = tuple(_body(rng, used, declared, 1, loop_stack, depth + 1))
            items.append(Conditional(
                condition=_text(rng, 4),
                then_branch=tuple(then_items),
                else_branch=else_items,
            ))
            budget -= 1 + len(then_items)
        elif len(declared) >= 2:
            pair = rng.sample([n for n, _t in declared], 2)
            items.append(Assignment(bindings=(Binding(target=pair[0], source=pair[1]),)))
            budget -= 1
        else:
            budget -= 1
    return items


def _template(rng: random.Random, depth: int = 0) -> TemplateChain:
    steps = []
    for _ in range(rng.randint(1, 4)):
        if depth == 0 and rng.random() < 0.25:
            steps.append(LoopStep(chain=_template(rng, depth + 1)))
        else:
            annotation = None
            if rng.random() < 0.3:
                annotation = rng.choice(_WORDS) + "-based"
            steps.append(IntentStep(intent=rng.choice(list(Intent)), annotation=annotation))
    return TemplateChain(steps=tuple(steps))


def valid_workflow(rng: random.Random, max_decls: int = 12) -> Workflow:
    """A structurally valid workflow AST: unique ids, declared refs, no cycles."""
    used: set[str] = set()
    declared: list[tuple[str, ArtifactType]] = []
    body = _body(rng, used, declared, rng.randint(0, max_decls), (), 0)
    return Workflow(
        name=f"wf_{rng.randint(0, 99999)}",
        template=_template(rng) if rng.random() < 0.4 else None,
        description=_text(rng) if rng.random() < 0.5 else None,
        body=tuple(body),
    )


# -- oracle-mode generation ----------------------------------------------------


def oracle_workflow(rng: random.Random, max_decls: int = 10) -> Workflow:
    """A small workflow that may contain duplicates, dangling refs, cycles."""
    pool = [f"n{i}" for i in range(rng.randint(2, 6))]
    items: list = []
    artifact_names: list[str] = []
    decls = rng.randint(2, max_decls)
    used: set[str] = set()
    for _ in range(decls):
        if rng.random() < 0.55:
            name = rng.choice(pool) if rng.random() < 0.5 else _name(rng, "a", used)
            items.append(ArtifactDecl(
                name=name,
                type=ArtifactType.ENTITIES,
                internal_structure=InternalStructure.ELEMENTARY,
                origin_given=rng.random() < 0.2,
                description="generated",
            ))
            artifact_names.append(name)
        else:
            candidates = pool + artifact_names
            ins = [rng.choice(candidates) for _ in range(rng.randint(1, 2))]
            outs = [rng.choice(candidates) for _ in range(rng.randint(1, 2))]
            name = _name(rng, "t", used) if rng.random() < 0.8 else rng.choice(pool)
            items.append(TransformDecl(
                name=name,
                intent=rng.choice(list(Intent)),
                inputs=tuple(dict.fromkeys(ins)),
                outputs=tuple(dict.fromkeys(outs)),
                actor=rng.choice(list(Actor)),
                description="generated",
            ))
    if len(artifact_names) >= 2 and rng.random() < 0.3:
        pair = rng.sample(artifact_names, 2)
        items.append(Assignment(bindings=(Binding(target=pair[0], source=pair[1]),)))
    return Workflow(name=f"oracle_{rng.randint(0, 99999)}", body=tuple(items))


def clean_wired_workflow(rng: random.Random, max_transforms: int = 6) -> Workflow:
    """Unique names, all refs declared; wiring is random so cycles can occur."""
    used: set[str] = set()
    artifacts = []
    for _ in range(rng.randint(2, 6)):
        artifact_type = rng.choice(
            [ArtifactType.ENTITIES, ArtifactType.FEATURE, ArtifactType.SPECIFICATION]
        )
        fields: dict = {}
        if artifact_type is ArtifactType.ENTITIES:
            fields["internal_structure"] = InternalStructure.ELEMENTARY
        elif artifact_type is ArtifactType.FEATURE:
            fields["value_structure"] = ValueStructure.ATOMIC
        else:
            fields["representation_form"] = "settings"
        artifacts.append(ArtifactDecl(
            name=_name(rng, "a", used),
            type=artifact_type,
            description="generated",
            **fields,
        ))
    names = [a.name for a in artifacts]
    items: list = list(artifacts)
    for _ in range(rng.randint(1, max_transforms)):
        ins = rng.sample(names, rng.randint(1, min(2, len(names))))
        outs = rng.sample(names, rng.randint(1, min(2, len(names))))
        items.append(TransformDecl(
            name=_name(rng, "t", used),
            intent=rng.choice(list(Intent)),
            inputs=tuple(ins),
            outputs=tuple(dict.fromkeys(outs)),
            actor=rng.choice(list(Actor)),
            description="generated",
        ))
    return Workflow(name=f"wired_{rng.randint(0, 99999)}", body=tuple(items))
