"""Independent oracles and syntax validators used to cross-check the toolchain.

Deliberately written against raw AST structures and plain text, sharing no
code with the implementations they check.
"""

from __future__ import annotations

import re

from atwl.syntax.nodes import (
    ArtifactDecl,
    Assignment,
    Conditional,
    LoopDecl,
    TransformDecl,
    Workflow,
)


def _all_items(items):
    for item in items:
        yield item
        if isinstance(item, LoopDecl):
            yield from _all_items(item.body)
        elif isinstance(item, Conditional):
            yield from _all_items(item.then_branch)
            if item.else_branch is not None:
                yield from _all_items(item.else_branch)


def duplicate_names_oracle(workflow: Workflow) -> set[str]:
    """Sort-and-scan duplicate detection over all declaration names."""
    names = sorted(
        item.name
        for item in _all_items(workflow.body)
        if isinstance(item, (ArtifactDecl, TransformDecl, LoopDecl))
    )
    duplicated = set()
    for previous, current in zip(names, names[1:]):
        if previous == current:
            duplicated.add(current)
    return duplicated


def undeclared_io_oracle(workflow: Workflow) -> tuple[int, int]:
    """Set-membership check: (# bad inputs, # bad outputs) over all transforms."""
    artifact_names = {
        item.name for item in _all_items(workflow.body) if isinstance(item, ArtifactDecl)
    }
    bad_inputs = 0
    bad_outputs = 0
    for item in _all_items(workflow.body):
        if not isinstance(item, TransformDecl):
            continue
        bad_inputs += sum(1 for name in item.inputs if name not in artifact_names)
        bad_outputs += sum(1 for name in item.outputs if name not in artifact_names)
    return bad_inputs, bad_outputs


def has_cycle_oracle(workflow: Workflow) -> bool:
    """Recursive three-colour DFS over input/output edges built from the AST."""
    adjacency: dict[str, set[str]] = {}
    artifact_names = {
        item.name for item in _all_items(workflow.body) if isinstance(item, ArtifactDecl)
    }
    for item in _all_items(workflow.body):
        if isinstance(item, TransformDecl):
            for name in item.inputs:
                if name in artifact_names:
                    adjacency.setdefault(name, set()).add(item.name)
            for name in item.outputs:
                if name in artifact_names:
                    adjacency.setdefault(item.name, set()).add(name)

    WHITE, GRAY, BLACK = 0, 1, 2
    colour: dict[str, int] = {}

    def visit(node: str) -> bool:
        colour[node] = GRAY
        for nxt in adjacency.get(node, ()):
            state = colour.get(nxt, WHITE)
            if state == GRAY:
                return True
            if state == WHITE and visit(nxt):
                return True
        colour[node] = BLACK
        return False

    return any(
        colour.get(node, WHITE) == WHITE and visit(node) for node in list(adjacency)
    )


def alias_components_oracle(bindings: list[tuple[str, str]]) -> set[frozenset[str]]:
    """Connected components by repeated merging (no union-find)."""
    components: list[set[str]] = []
    for a, b in bindings:
        touching = [c for c in components if a in c or b in c]
        merged = {a, b}
        for c in touching:
            merged |= c
            components.remove(c)
        components.append(merged)
    return {frozenset(c) for c in components}


def subsequence_oracle(needle: list, haystack: list) -> bool:
    """O(n*m) dynamic check, independent of the iterator-based implementation."""
    i = 0
    for item in haystack:
        if i < len(needle) and needle[i] == item:
            i += 1
    return i == len(needle)


# -- brute-force block predicates ---------------------------------------------


def brute_force_blocks(graph, tree) -> set[tuple]:
    """Exhaustively test every transform tuple against plain block predicates.

    Returns {(block_id, transforms tuple)} for comparison with the matcher's
    output keyed the same way. Covers the chain blocks SP-3..SP-6 whose role
    structure is a pure transform tuple.
    """
    from atwl.ontology import Actor, ArtifactType, Intent

    transforms = list(graph.transform_nodes)
    outputs = {
        t.name: {e.target for e in graph.edges if e.kind == "output" and e.source == t.name}
        for t in transforms
    }
    inputs = {
        t.name: {
            sibling
            for e in graph.edges
            if e.kind == "input" and e.target == t.name
            for sibling in graph.alias.group(e.source)
        }
        for t in transforms
    }
    types = {a.name: a.type for a in graph.artifact_nodes}

    def linked(up, down):
        return bool(outputs[up] & inputs[down])

    def linked_via_feature(up, down):
        return any(
            types.get(a) is ArtifactType.FEATURE for a in outputs[up] & inputs[down]
        )

    found: set[tuple] = set()
    by_intent: dict[Intent, list] = {}
    for t in transforms:
        if t.intent is not None:
            by_intent.setdefault(t.intent, []).append(t)

    def tuples(*intents):
        # Plain cartesian product over intent pools, distinct names only.
        pools = [by_intent.get(i, ()) for i in intents]

        def cartesian(idx, prefix):
            if idx == len(pools):
                yield prefix
                return
            for node in pools[idx]:
                if node.name in prefix:
                    continue
                yield from cartesian(idx + 1, prefix + (node.name,))

        yield from cartesian(0, ())

    for c, d in tuples(Intent.CHARACTERISE, Intent.DEFINE_UNIT):
        if linked_via_feature(c, d):
            found.add(("SP-3", (c, d)))
    for a, b, c in tuples(Intent.CONTEXTUALISE, Intent.VISUALISE, Intent.ABSTRACT):
        if linked(a, b) and linked(b, c):
            found.add(("SP-4", (a, b, c)))
    for a, b, c, d in tuples(Intent.BUILD_MODEL, Intent.CHARACTERISE,
                             Intent.VISUALISE, Intent.ASSESS):
        if linked(a, b) and linked(b, c) and linked(c, d):
            found.add(("SP-5", (a, b, c, d)))
    names = {t.name: t for t in transforms}
    for v, a, s in tuples(Intent.VISUALISE, Intent.ABSTRACT, Intent.ASSESS):
        if not (linked(v, a) and linked(a, s)):
            continue
        if names[v].actor is not Actor.HYBRID:
            continue
        loops_v = tree.enclosing_loops(v)
        if not loops_v:
            continue
        innermost = loops_v[-1]
        in_loop = lambda n: innermost in tree.enclosing_loops(n)
        if in_loop(a) and in_loop(s) and tree.innermost_loop(a) == innermost and tree.innermost_loop(s) == innermost:
            found.add(("SP-6", (v, a, s)))
    return found


# -- output format validators ---------------------------------------------------


class FormatError(AssertionError):
    pass


_DOT_TOKEN = re.compile(
    r'\s*(?:(?P<string>"(?:[^"\\]|\\.)*")|(?P<arrow>->)|(?P<sym>[{}\[\];=,])|(?P<id>[A-Za-z0-9_.#]+))'
)


def validate_dot(text: str) -> tuple[set[str], list[tuple[str, str]]]:
    """Syntax-level validation of the emitted DOT subset.

    Returns (defined node ids, edges). Raises FormatError on malformed input
    or on an edge endpoint that is never defined as a node.
    """
    tokens: list[str] = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _DOT_TOKEN.match(text, pos)
        if not m:
            raise FormatError(f"dot: cannot tokenize at offset {pos}: {text[pos:pos+20]!r}")
        tokens.append(m.group(0).strip())
        pos = m.end()

    def unquote(token: str) -> str:
        if token.startswith('"'):
            return token[1:-1].replace('\\"', '"').replace("\\\\", "\\")
        return token

    i = 0

    def expect(value: str) -> None:
        nonlocal i
        if i >= len(tokens) or tokens[i] != value:
            raise FormatError(f"dot: expected {value!r} at token {i}: {tokens[i:i+4]}")
        i += 1

    nodes: set[str] = set()
    edges: list[tuple[str, str]] = []

    def parse_attr_list() -> None:
        nonlocal i
        expect("[")
        depth = 1
        while i < len(tokens) and depth:
            if tokens[i] == "[":
                depth += 1
            elif tokens[i] == "]":
                depth -= 1
            i += 1
        if depth:
            raise FormatError("dot: unterminated attribute list")

    def parse_block() -> None:
        nonlocal i
        expect("{")
        while i < len(tokens) and tokens[i] != "}":
            token = tokens[i]
            if token == "subgraph":
                i += 1
                i += 1  # subgraph name
                parse_block()
                continue
            if token in ("node", "edge", "graph") and i + 1 < len(tokens) and tokens[i + 1] == "[":
                i += 1
                parse_attr_list()
                if i < len(tokens) and tokens[i] == ";":
                    i += 1
                continue
            # id-led statement: assignment, node, or edge
            name = unquote(token)
            i += 1
            if i < len(tokens) and tokens[i] == "=":
                i += 2
                if i < len(tokens) and tokens[i] == ";":
                    i += 1
                continue
            if i < len(tokens) and tokens[i] == "->":
                i += 1
                target = unquote(tokens[i])
                i += 1
                if i < len(tokens) and tokens[i] == "[":
                    parse_attr_list()
                edges.append((name, target))
            else:
                nodes.add(name)
                if i < len(tokens) and tokens[i] == "[":
                    parse_attr_list()
            if i < len(tokens) and tokens[i] == ";":
                i += 1
        expect("}")

    expect("digraph")
    i += 1  # graph name
    parse_block()
    if i != len(tokens):
        raise FormatError(f"dot: trailing tokens: {tokens[i:]}")
    for source, target in edges:
        if source not in nodes or target not in nodes:
            raise FormatError(f"dot: edge endpoint not defined: {source} -> {target}")
    return nodes, edges


_MERMAID_NODE_PATTERNS = (
    re.compile(r'(?P<key>\w+)\[\["(?P<label>[^"]*)"\]\]$'),   # double border
    re.compile(r'(?P<key>\w+)\(\["(?P<label>[^"]*)"\]\)$'),   # stadium
    re.compile(r'(?P<key>\w+)\["(?P<label>[^"]*)"\]$'),       # box
    re.compile(r'(?P<key>\w+)\{"(?P<label>[^"]*)"\}$'),       # decision
)
_MERMAID_EDGE_PATTERNS = (
    re.compile(r"(?P<a>\w+) -->\|(?P<label>[^|]*)\| (?P<b>\w+)$"),
    re.compile(r"(?P<a>\w+) --> (?P<b>\w+)$"),
    re.compile(r"(?P<a>\w+) -\. (?P<label>.+) \.-> (?P<b>\w+)$"),
    re.compile(r"(?P<a>\w+) -\.-> (?P<b>\w+)$"),
)
_MERMAID_SUBGRAPH = re.compile(r'subgraph (?P<key>\w+) \["(?P<label>[^"]*)"\]$')


def validate_mermaid(text: str) -> tuple[dict[str, str], list[tuple[str, str]]]:
    """Syntax-level validation of the emitted Mermaid flowchart subset.

    Returns ({node key: label}, edges). Subgraph ids are legal edge endpoints.
    Raises FormatError on malformed lines, unbalanced subgraphs, or edges to
    undefined keys.
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != "flowchart TD":
        raise FormatError("mermaid: missing flowchart header")
    nodes: dict[str, str] = {}
    subgraphs: set[str] = set()
    edges: list[tuple[str, str]] = []
    depth = 0
    for raw in lines[1:]:
        line = raw.strip()
        if not line:
            continue
        if line == "end":
            depth -= 1
            if depth < 0:
                raise FormatError("mermaid: unbalanced 'end'")
            continue
        m = _MERMAID_SUBGRAPH.match(line)
        if m:
            subgraphs.add(m.group("key"))
            depth += 1
            continue
        for pattern in _MERMAID_NODE_PATTERNS:
            m = pattern.match(line)
            if m:
                nodes[m.group("key")] = m.group("label")
                break
        else:
            for pattern in _MERMAID_EDGE_PATTERNS:
                m = pattern.match(line)
                if m:
                    edges.append((m.group("a"), m.group("b")))
                    break
            else:
                raise FormatError(f"mermaid: unrecognised line: {line!r}")
    if depth != 0:
        raise FormatError("mermaid: unclosed subgraph")
    known = set(nodes) | subgraphs
    for a, b in edges:
        if a not in known or b not in known:
            raise FormatError(f"mermaid: edge endpoint not defined: {a} --> {b}")
    return nodes, edges
