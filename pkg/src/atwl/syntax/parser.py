"""Parser for workflow source text.

The surface syntax is line-oriented with significant indentation. Parsing is
two-phase: a scanner folds physical lines into logical lines (joining quoted
strings and comma-continued identifier lists that span lines, stripping
comments), then a recursive-descent pass builds the AST from indentation
structure. All failures are reported as diagnostics on a partial AST; the
parser never raises on malformed input.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from atwl.diagnostics import Diagnostic, Span, error, warning
from atwl.ontology import (
    UnknownKeywordError,
    actor_from_keyword,
    artifact_type_from_keyword,
    embedment_from_keyword,
    intent_from_keyword,
    internal_structure_from_keyword,
    value_structure_from_keyword,
    value_type_from_keyword,
)
from atwl.syntax.nodes import (
    ArtifactDecl,
    Assignment,
    Binding,
    BodyItem,
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
    is_identifier,
    is_workflow_id,
)

_WORKFLOW_RE = re.compile(r"workflow\s+(\S+)\s*$")
_ARTIFACT_RE = re.compile(r"artifact\s+(\S+)\s*:\s*(.*)$")
_TRANSFORM_RE = re.compile(r"transform\s+(\S+)\s*:\s*(.*)$")
_LOOP_RE = re.compile(r"loop\s+(\S+?)\s*:\s*$")
_END_LOOP_RE = re.compile(r"end\s+loop\s+(\S+)\s*$")
_IF_RE = re.compile(r"if\s+(.*):\s*$")
_ASSIGN_RE = re.compile(r"assign\s*:\s*$")
_EXIT_RE = re.compile(r"exit\s+loop\s+(\S+)\s*$")
_BINDING_RE = re.compile(r"(\S+)\s*:=\s*(\S+)\s*$")
_FEATURE_ITEM_RE = re.compile(r"-\s+(.*)$")
_TYPE_EXPR_RE = re.compile(r"([A-Za-z][A-Za-z-]*)\s*(\((.*)\))?\s*$")

_ARTIFACT_TEXT_FIELDS = {
    "principle",
    "layout",
    "form",
    "encoding",
    "representation form",
    "model type",
    "description",
}


@dataclass
class _Line:
    """One logical line: indentation, comment-free content, source extent."""

    indent: int
    text: str
    line_no: int
    end_line_no: int
    end_column: int

    @property
    def span(self) -> Span:
        return Span(self.line_no, self.indent + 1, self.end_line_no, self.end_column)


@dataclass
class ParseResult:
    workflow: Workflow | None
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return not any(d.is_error for d in self.diagnostics)


class TemplateSyntaxError(ValueError):
    """Raised by the standalone template parser on malformed chains."""

    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic
        super().__init__(diagnostic.message)


def _strip_comment(text: str, in_quote: bool) -> tuple[str, bool]:
    """Drop a trailing `# ...` comment, honouring double-quote state."""
    out = []
    for ch in text:
        if ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote:
            break
        out.append(ch)
    return "".join(out).rstrip(), in_quote


class _Scanner:
    """Folds physical source lines into logical lines."""

    def __init__(self, source: str, diagnostics: list[Diagnostic]):
        self.raw_lines = source.replace("\r\n", "\n").replace("\r", "\n").split("\n")
        self.diagnostics = diagnostics

    def _indent_of(self, raw: str, line_no: int) -> tuple[int, int]:
        """(indent width, index of first content char); tabs are diagnosed."""
        indent = 0
        i = 0
        for ch in raw:
            if ch == " ":
                indent += 1
            elif ch == "\t":
                self.diagnostics.append(
                    error("E021", Span(line_no, i + 1, line_no, i + 2),
                          "tab character in indentation (use spaces)")
                )
                indent += 4
            else:
                break
            i += 1
        return indent, i

    def scan(self) -> list[_Line]:
        lines: list[_Line] = []
        n = len(self.raw_lines)
        idx = 0
        while idx < n:
            raw = self.raw_lines[idx]
            line_no = idx + 1
            indent, start = self._indent_of(raw, line_no)
            content = raw[start:]
            if not content.strip() or content.lstrip().startswith("#"):
                idx += 1
                continue
            for ch in content:
                if ord(ch) < 32 and ch != "\t":
                    self.diagnostics.append(
                        error("E020", Span(line_no, start + 1, line_no, start + 2),
                              f"illegal control character {ch!r}")
                    )
            content, in_quote = _strip_comment(content, False)
            end_idx = idx
            # Continuations: an unterminated quoted string always continues; an
            # identifier list continues past a trailing comma onto a deeper line.
            while True:
                if in_quote:
                    if end_idx + 1 >= n:
                        self.diagnostics.append(
                            error("E028", Span(line_no, indent + 1, line_no, indent + 2),
                                  "unterminated quoted string")
                        )
                        break
                    end_idx += 1
                    cont, in_quote = _strip_comment(self.raw_lines[end_idx].strip(), True)
                    content = (content.rstrip() + " " + cont).rstrip()
                elif content.endswith(","):
                    if end_idx + 1 >= n:
                        break
                    nxt = self.raw_lines[end_idx + 1]
                    nxt_indent = len(nxt) - len(nxt.lstrip(" "))
                    if not nxt.strip() or nxt_indent <= indent:
                        break
                    end_idx += 1
                    cont, in_quote = _strip_comment(nxt.strip(), False)
                    content = content + " " + cont
                else:
                    break
            end_raw = self.raw_lines[end_idx].rstrip()
            lines.append(
                _Line(indent, content, line_no, end_idx + 1, max(len(end_raw), 1) + 1)
            )
            idx = end_idx + 1
        return lines


class _Parser:
    def __init__(self, lines: list[_Line], diagnostics: list[Diagnostic]):
        self.lines = lines
        self.pos = 0
        self.diagnostics = diagnostics

    # -- helpers ----------------------------------------------------------

    def _peek(self) -> _Line | None:
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def _err(self, code: str, span: Span, message: str, related=()) -> None:
        self.diagnostics.append(error(code, span, message, tuple(related)))

    def _warn(self, code: str, span: Span, message: str) -> None:
        self.diagnostics.append(warning(code, span, message))

    def _parse_text(self, value: str, span: Span) -> str:
        """Unquote a free-text value; raw text is accepted as-is."""
        if value.startswith('"'):
            if len(value) >= 2 and value.endswith('"'):
                inner = value[1:-1]
                if '"' in inner:
                    self._err("E022", span, "quotes inside free text are not supported")
                    return inner.replace('"', "")
                return inner
            self._err("E028", span, "unterminated quoted string")
            return value.strip('"')
        if value.endswith('"') or '"' in value:
            self._err("E022", span, "stray quote in unquoted value")
            return value.replace('"', "")
        return value

    def _parse_id_list(self, value: str, span: Span, what: str) -> tuple[str, ...]:
        if not value.strip():
            return ()
        if value.rstrip().endswith(","):
            self._err("E027", span, f"trailing comma in {what} list")
            value = value.rstrip().rstrip(",")
        ids = []
        for token in value.split(","):
            token = token.strip()
            if not token:
                self._err("E022", span, f"empty item in {what} list")
                continue
            if not is_identifier(token):
                self._err("E022", span, f"invalid identifier {token!r} in {what} list")
                continue
            ids.append(token)
        return tuple(ids)

    def _parse_enum_set(self, value: str, span: Span, from_keyword, what: str):
        """Parse `{a, b}` or a bare keyword into a frozenset of enum values."""
        value = value.strip()
        if value.startswith("{"):
            if not value.endswith("}"):
                self._err("E022", span, f"malformed set notation in {what}")
                return None
            tokens = [t.strip() for t in value[1:-1].split(",")]
        else:
            tokens = [value]
        members = []
        for token in tokens:
            if not token:
                self._err("E022", span, f"empty item in {what} set")
                continue
            try:
                members.append(from_keyword(token))
            except UnknownKeywordError as exc:
                self._err("E011", span, str(exc))
        if not members:
            return None
        return frozenset(members)

    @staticmethod
    def _split_field(text: str) -> tuple[str, str] | None:
        """Split `key: value` at the first colon; None when no colon exists."""
        if ":" not in text:
            return None
        key, _, value = text.partition(":")
        key = " ".join(key.split())
        return key, value.strip()

    def _is_block_end(self, line: _Line) -> bool:
        """Lines that close an enclosing construct, whatever their indent."""
        return bool(
            _END_LOOP_RE.fullmatch(line.text)
            or line.text.rstrip() in ("then:", "else:")
        )

    # -- top level ---------------------------------------------------------

    def parse_workflow(self) -> Workflow | None:
        if not self.lines:
            self._err("E025", Span(1, 1, 1, 1), "source contains no workflow header")
            return None
        first = self.lines[self.pos]
        m = _WORKFLOW_RE.fullmatch(first.text)
        name = ""
        header_span = first.span
        if m:
            name = m.group(1)
            if not is_workflow_id(name):
                self._err("E022", first.span, f"invalid workflow identifier {name!r}")
            self.pos += 1
        else:
            self._err("E025", first.span,
                      "file must begin with a workflow header (`workflow <ID>`)")
        template = None
        description = None
        # Header fields may sit at any indent before the first declaration
        # (the golden corpus puts them at column 0).
        while (line := self._peek()) is not None:
            kv = self._split_field(line.text)
            if kv is None or kv[0] not in ("template", "description") or ":=" in line.text:
                break
            key, value = kv
            self.pos += 1
            if key == "template":
                if template is not None:
                    self._err("E022", line.span, "duplicate template field")
                    continue
                chain, diags = parse_template_diags(value, line.span)
                self.diagnostics.extend(diags)
                template = chain
            else:
                if description is not None:
                    self._err("E022", line.span, "duplicate description field")
                    continue
                description = self._parse_text(value, line.span)
        # Top-level segments may sit at more than one indent level; keep
        # consuming until every line is accounted for.
        body_items: list[BodyItem] = []
        while (line := self._peek()) is not None:
            start_pos = self.pos
            body_items.extend(self.parse_body(line.indent, in_branch=False, top_level=True))
            if self.pos == start_pos:
                item = self.parse_statement(self.lines[self.pos], in_branch=False, top_level=True)
                if item is not None:
                    body_items.append(item)
        body = tuple(body_items)
        last = self.lines[-1]
        span = Span(header_span.line, header_span.column, last.end_line_no, last.end_column)
        workflow = Workflow(name=name, template=template, description=description,
                            body=body, span=span)
        if not body:
            self._warn("W101", header_span, "workflow has an empty body")
        return workflow

    # -- statement dispatch --------------------------------------------------

    def parse_body(self, body_indent: int, *, in_branch: bool, top_level: bool = False) -> list[BodyItem]:
        items: list[BodyItem] = []
        while (line := self._peek()) is not None:
            if line.indent < body_indent or self._is_block_end(line):
                break
            if line.indent > body_indent:
                # Misaligned sibling; diagnose once, then parse it anyway so
                # the whole declaration is consumed in one go.
                self._err("E021", line.span, "unexpected indentation")
            item = self.parse_statement(line, in_branch=in_branch, top_level=top_level)
            if item is not None:
                items.append(item)
        return items

    def parse_statement(self, line: _Line, *, in_branch: bool, top_level: bool) -> BodyItem | None:
        text = line.text
        if m := _ARTIFACT_RE.fullmatch(text):
            return self.parse_artifact(line, m.group(1), m.group(2).strip())
        if m := _TRANSFORM_RE.fullmatch(text):
            return self.parse_transform(line, m.group(1), m.group(2).strip())
        if m := _LOOP_RE.fullmatch(text):
            return self.parse_loop(line, m.group(1))
        if m := _IF_RE.fullmatch(text):
            return self.parse_conditional(line, m.group(1).strip())
        if _ASSIGN_RE.fullmatch(text):
            return self.parse_assignment(line)
        if m := _EXIT_RE.fullmatch(text):
            self.pos += 1
            if not in_branch:
                self._err("E029", line.span,
                          "exit directive is only legal inside a conditional branch")
                return None
            return ExitDirective(loop_name=m.group(1), span=line.span)
        if _WORKFLOW_RE.fullmatch(text):
            self.pos += 1
            self._err("E024", line.span, "duplicate workflow header (one workflow per file)")
            return None
        if m := _END_LOOP_RE.fullmatch(text):
            # Unmatched closer; parse_body breaks before this inside loops.
            self.pos += 1
            self._err("E030", line.span, f"'end loop {m.group(1)}' without an open loop")
            return None
        self.pos += 1
        if _BINDING_RE.fullmatch(text):
            self._err("E023", line.span, "assignment binding outside an assign block")
        elif top_level and self._split_field(text) is not None:
            self._err("E023", line.span,
                      "field line outside any declaration (header fields must "
                      "precede the first declaration)")
        else:
            self._err("E023", line.span, f"unrecognised statement: {text.split(':')[0]!r}")
        return None

    # -- declarations ----------------------------------------------------------

    def parse_artifact(self, header: _Line, name: str, type_text: str) -> ArtifactDecl:
        self.pos += 1
        if not is_identifier(name):
            self._err("E022", header.span, f"invalid artifact identifier {name!r}")
        if not type_text:
            # Listing style: the type expression may sit alone on the next,
            # deeper-indented line.
            nxt = self._peek()
            if (
                nxt is not None
                and nxt.indent > header.indent
                and ":" not in nxt.text
                and _TYPE_EXPR_RE.fullmatch(nxt.text)
            ):
                type_text = nxt.text
                self.pos += 1
            else:
                self._err("E031", header.span, f"artifact {name!r} has no type")
        artifact_type = None
        references: tuple[str, ...] = ()
        if type_text:
            if type_text.count("(") != type_text.count(")"):
                self._err("E026", header.span, "unbalanced parentheses in artifact type")
                type_text = type_text.split("(")[0].strip()
            m = _TYPE_EXPR_RE.fullmatch(type_text)
            if not m:
                self._err("E022", header.span, f"malformed artifact type {type_text!r}")
            else:
                try:
                    artifact_type = artifact_type_from_keyword(m.group(1))
                except UnknownKeywordError as exc:
                    self._err("E011", header.span, str(exc))
                if m.group(2) is not None:
                    references = self._parse_id_list(
                        m.group(3), header.span, "artifact reference"
                    )
        fields, end_line = self._parse_field_block(header)
        span = Span(header.line_no, header.indent + 1, end_line.end_line_no, end_line.end_column)
        return self._assemble_artifact(name, artifact_type, references, fields, span)

    def _parse_field_block(self, header: _Line) -> tuple[list[tuple[str, str, _Line]], _Line]:
        """Collect `key: value` lines nested under a declaration header."""
        fields: list[tuple[str, str, _Line]] = []
        last = header
        while (line := self._peek()) is not None:
            if line.indent <= header.indent or self._is_block_end(line):
                break
            self.pos += 1
            last = line
            kv = self._split_field(line.text)
            if kv is None:
                self._err("E022", line.span, f"expected 'key: value', got {line.text!r}")
                continue
            key, value = kv
            if key == "features" and not value:
                # Marker; items follow as a block list.
                fields.append((key, "", line))
                items, last = self._parse_feature_items(line)
                fields.append(("__features__", items, last))  # type: ignore[arg-type]
                continue
            fields.append((key, value, line))
        return fields, last

    def _parse_feature_items(self, features_line: _Line):
        items: list[FeatureDecl] = []
        last = features_line
        item_indent = None
        while (line := self._peek()) is not None:
            if line.indent <= features_line.indent or self._is_block_end(line):
                break
            m = _FEATURE_ITEM_RE.fullmatch(line.text)
            if m is None:
                self._err("E022", line.span, "expected a feature list item (`- id: ...`)")
                self.pos += 1
                last = line
                continue
            if item_indent is None:
                item_indent = line.indent
            if line.indent != item_indent:
                self._err("E021", line.span, "inconsistent feature item indentation")
            self.pos += 1
            last = line
            item, last = self._parse_feature_item(line, m.group(1))
            items.append(item)
        return tuple(items), last

    def _parse_feature_item(self, item_line: _Line, first_field: str) -> tuple[FeatureDecl, _Line]:
        name = ""
        value_structure = None
        value_type = None
        description = None
        unknown: list[UnknownField] = []
        present: set[str] = set()
        last = item_line

        def handle(key: str, value: str, line: _Line) -> None:
            nonlocal name, value_structure, value_type, description
            present.add(key)
            if key == "id":
                name = value.strip()
                if not is_identifier(name):
                    self._err("E022", line.span, f"invalid feature identifier {name!r}")
            elif key == "value structure":
                try:
                    value_structure = value_structure_from_keyword(value)
                except UnknownKeywordError as exc:
                    self._err("E011", line.span, str(exc))
                    unknown.append(UnknownField(key, value, line.span))
            elif key == "value type":
                value_type = self._parse_enum_set(
                    value, line.span, value_type_from_keyword, "value type"
                )
                if value_type is None:
                    unknown.append(UnknownField(key, value, line.span))
            elif key == "description":
                description = self._parse_text(value, line.span)
            else:
                self._warn("W110", line.span, f"unknown feature field {key!r} (preserved)")
                unknown.append(UnknownField(key, value, line.span))

        kv = self._split_field(first_field)
        if kv is None or kv[0] != "id":
            self._err("E022", item_line.span, "feature list item must begin with `- id:`")
            if kv is not None:
                handle(kv[0], kv[1], item_line)
        else:
            handle("id", kv[1], item_line)
        while (line := self._peek()) is not None:
            if line.indent <= item_line.indent or self._is_block_end(line):
                break
            if _FEATURE_ITEM_RE.fullmatch(line.text):
                break
            self.pos += 1
            last = line
            kv = self._split_field(line.text)
            if kv is None:
                self._err("E022", line.span, f"expected 'key: value', got {line.text!r}")
                continue
            handle(kv[0], kv[1], line)
        span = Span(item_line.line_no, item_line.indent + 1, last.end_line_no, last.end_column)
        return (
            FeatureDecl(
                name=name,
                value_structure=value_structure,
                value_type=value_type,
                description=description,
                unknown_fields=tuple(unknown),
                span=span,
                present_keys=frozenset(present),
            ),
            last,
        )

    def _assemble_artifact(self, name, artifact_type, references, fields, span) -> ArtifactDecl:
        values: dict = {}
        features: tuple[FeatureDecl, ...] = ()
        unknown: list[UnknownField] = []
        present: set[str] = set()
        seen: set[str] = set()
        for key, value, line in fields:
            if key == "__features__":
                features = value  # already parsed items
                continue
            present.add(key)
            if key in seen and key != "features":
                self._err("E022", line.span, f"duplicate field {key!r}")
                continue
            seen.add(key)
            if key == "features":
                if value:
                    self._err("E022", line.span,
                              "features must introduce a block list, not an inline value")
                continue
            if key == "origin":
                if value.strip() == "given":
                    values["origin_given"] = True
                else:
                    self._err("E011", line.span,
                              f"origin admits only the literal 'given', got {value!r}")
                    unknown.append(UnknownField(key, value, line.span))
            elif key == "internal structure":
                try:
                    values["internal_structure"] = internal_structure_from_keyword(value)
                except UnknownKeywordError as exc:
                    self._err("E011", line.span, str(exc))
                    unknown.append(UnknownField(key, value, line.span))
            elif key == "embedment":
                parsed = self._parse_enum_set(value, line.span, embedment_from_keyword, "embedment")
                if parsed is not None:
                    values["embedment"] = parsed
                else:
                    unknown.append(UnknownField(key, value, line.span))
            elif key == "value structure":
                try:
                    values["value_structure"] = value_structure_from_keyword(value)
                except UnknownKeywordError as exc:
                    self._err("E011", line.span, str(exc))
                    unknown.append(UnknownField(key, value, line.span))
            elif key == "value type":
                parsed = self._parse_enum_set(value, line.span, value_type_from_keyword, "value type")
                if parsed is not None:
                    values["value_type"] = parsed
                else:
                    unknown.append(UnknownField(key, value, line.span))
            elif key == "context":
                ctx = value.strip()
                if not is_identifier(ctx):
                    self._err("E022", line.span, f"context must be an identifier, got {ctx!r}")
                else:
                    values["context"] = ctx
            elif key in _ARTIFACT_TEXT_FIELDS:
                attr = key.replace(" ", "_")
                values[attr] = self._parse_text(value, line.span)
            else:
                self._warn("W110", line.span, f"unknown artifact field {key!r} (preserved)")
                unknown.append(UnknownField(key, value, line.span))
        return ArtifactDecl(
            name=name,
            type=artifact_type,
            references=references,
            features=features,
            unknown_fields=tuple(unknown),
            span=span,
            present_keys=frozenset(present),
            **values,
        )

    def parse_transform(self, header: _Line, name: str, rest: str) -> TransformDecl:
        self.pos += 1
        if not is_identifier(name):
            self._err("E022", header.span, f"invalid transform identifier {name!r}")
        if rest:
            self._err("E022", header.span,
                      f"unexpected text after 'transform {name} :'")
        fields, end_line = self._parse_field_block(header)
        values: dict = {}
        unknown: list[UnknownField] = []
        present: set[str] = set()
        seen: set[str] = set()
        for key, value, line in fields:
            present.add(key)
            if key in seen:
                self._err("E022", line.span, f"duplicate field {key!r}")
                continue
            seen.add(key)
            if key == "intent":
                try:
                    values["intent"] = intent_from_keyword(value.strip())
                except UnknownKeywordError as exc:
                    self._err("E011", line.span, str(exc))
                    unknown.append(UnknownField(key, value, line.span))
            elif key == "actor":
                try:
                    values["actor"] = actor_from_keyword(value.strip())
                except UnknownKeywordError as exc:
                    self._err("E011", line.span, str(exc))
                    unknown.append(UnknownField(key, value, line.span))
            elif key == "input":
                values["inputs"] = self._parse_id_list(value, line.span, "input")
            elif key == "output":
                values["outputs"] = self._parse_id_list(value, line.span, "output")
            elif key in ("manner", "description"):
                values[key] = self._parse_text(value, line.span)
            else:
                self._warn("W110", line.span, f"unknown transform field {key!r} (preserved)")
                unknown.append(UnknownField(key, value, line.span))
        span = Span(header.line_no, header.indent + 1, end_line.end_line_no, end_line.end_column)
        return TransformDecl(
            name=name,
            unknown_fields=tuple(unknown),
            span=span,
            present_keys=frozenset(present),
            **values,
        )

    # -- control structures -----------------------------------------------------

    def parse_loop(self, header: _Line, name: str) -> LoopDecl:
        self.pos += 1
        if not is_identifier(name):
            self._err("E022", header.span, f"invalid loop identifier {name!r}")
        purpose = None
        until = None
        body: tuple[BodyItem, ...] = ()
        saw_body = False
        last = header
        while (line := self._peek()) is not None:
            if line.indent <= header.indent or _END_LOOP_RE.fullmatch(line.text):
                break
            kv = self._split_field(line.text)
            if kv is not None and kv[0] == "purpose":
                self.pos += 1
                last = line
                purpose = self._parse_text(kv[1], line.span)
            elif kv is not None and kv[0] == "until":
                self.pos += 1
                last = line
                until = self._parse_text(kv[1], line.span)
            elif kv is not None and kv[0] == "body" and not kv[1]:
                self.pos += 1
                saw_body = True
                nxt = self._peek()
                if nxt is not None and nxt.indent > line.indent:
                    body = tuple(self.parse_body(nxt.indent, in_branch=False))
                last = self.lines[self.pos - 1] if self.pos > 0 else line
            else:
                self._err("E023", line.span,
                          f"unrecognised line inside loop {name!r} (expected purpose, "
                          "until, or body)")
                self.pos += 1
                last = line
        if not saw_body:
            self._err("E022", header.span, f"loop {name!r} has no 'body:' block")
        closer = self._peek()
        end_line = last
        if closer is not None and (m := _END_LOOP_RE.fullmatch(closer.text)):
            self.pos += 1
            end_line = closer
            if m.group(1) != name:
                self._err("E030", closer.span,
                          f"'end loop {m.group(1)}' does not match loop {name!r}",
                          related=((header.span, "loop opened here"),))
        else:
            self._err("E030", header.span, f"loop {name!r} is not closed by 'end loop {name}'")
        span = Span(header.line_no, header.indent + 1, end_line.end_line_no, end_line.end_column)
        return LoopDecl(name=name, purpose=purpose, until=until, body=body, span=span)

    def parse_conditional(self, header: _Line, condition: str) -> Conditional:
        self.pos += 1
        then_branch: tuple[BodyItem, ...] | None = None
        else_branch: tuple[BodyItem, ...] | None = None
        last = header
        while (line := self._peek()) is not None:
            if line.indent <= header.indent or _END_LOOP_RE.fullmatch(line.text):
                break
            marker = line.text.rstrip()
            if marker == "then:":
                self.pos += 1
                branch, last = self._parse_branch(line)
                if then_branch is not None:
                    self._err("E022", line.span, "duplicate then branch")
                else:
                    then_branch = branch
            elif marker == "else:":
                self.pos += 1
                branch, last = self._parse_branch(line)
                if else_branch is not None:
                    self._err("E022", line.span, "duplicate else branch")
                else:
                    else_branch = branch
            else:
                # Recovery: treat unmarked content as the then branch.
                self._err("E022", line.span, "expected 'then:' or 'else:' inside conditional")
                branch = tuple(self.parse_body(line.indent, in_branch=True))
                last = self.lines[self.pos - 1] if self.pos > 0 else line
                if then_branch is None:
                    then_branch = branch
        if then_branch is None:
            self._err("E022", header.span, "conditional has no then branch")
            then_branch = ()
        span = Span(header.line_no, header.indent + 1, last.end_line_no, last.end_column)
        return Conditional(condition=condition, then_branch=then_branch,
                           else_branch=else_branch, span=span)

    def _parse_branch(self, marker_line: _Line) -> tuple[tuple[BodyItem, ...], _Line]:
        nxt = self._peek()
        if nxt is None or nxt.indent <= marker_line.indent:
            return (), marker_line
        items = tuple(self.parse_body(nxt.indent, in_branch=True))
        last = self.lines[self.pos - 1] if self.pos > 0 else marker_line
        return items, last

    def parse_assignment(self, header: _Line) -> Assignment | None:
        self.pos += 1
        bindings: list[Binding] = []
        last = header
        while (line := self._peek()) is not None:
            if line.indent <= header.indent or self._is_block_end(line):
                break
            self.pos += 1
            last = line
            m = _BINDING_RE.fullmatch(line.text)
            if not m:
                self._err("E022", line.span, f"expected '<ID> := <ID>', got {line.text!r}")
                continue
            target, source = m.group(1), m.group(2)
            for ident in (target, source):
                if not is_identifier(ident):
                    self._err("E022", line.span, f"invalid identifier {ident!r} in assignment")
            bindings.append(Binding(target=target, source=source, span=line.span))
        if not bindings:
            self._err("E022", header.span, "assignment block has no bindings")
            return None
        span = Span(header.line_no, header.indent + 1, last.end_line_no, last.end_column)
        return Assignment(bindings=tuple(bindings), span=span)


# -- template chains ---------------------------------------------------------


def _split_arrows(text: str) -> list[str] | None:
    """Split on `->` at parenthesis depth zero; None on unbalanced parens."""
    parts: list[str] = []
    cur: list[str] = []
    depth = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                return None
        if depth == 0 and text.startswith("->", i):
            parts.append("".join(cur))
            cur = []
            i += 2
            continue
        cur.append(ch)
        i += 1
    if depth != 0:
        return None
    parts.append("".join(cur))
    return parts


def parse_template_diags(text: str, span: Span) -> tuple[TemplateChain | None, list[Diagnostic]]:
    """Parse a template chain, reporting problems as diagnostics."""
    diags: list[Diagnostic] = []

    def parse_chain(chunk: str) -> TemplateChain | None:
        parts = _split_arrows(chunk)
        if parts is None:
            diags.append(error("E026", span, "unbalanced parentheses in template"))
            return None
        steps = []
        for part in parts:
            step_text = part.strip()
            if not step_text:
                diags.append(error("E022", span, "empty step in template chain"))
                continue
            if re.fullmatch(r"loop\s*\(.*\)", step_text, re.DOTALL):
                inner = step_text[step_text.index("(") + 1 : step_text.rindex(")")]
                chain = parse_chain(inner)
                if chain is not None:
                    steps.append(LoopStep(chain=chain))
                continue
            m = re.fullmatch(r"(\S+?)\s*(?:\((.*)\))?", step_text, re.DOTALL)
            if m is None or "(" in (m.group(1) or ""):
                diags.append(error("E022", span, f"malformed template step {step_text!r}"))
                continue
            try:
                intent = intent_from_keyword(m.group(1))
            except UnknownKeywordError as exc:
                diags.append(error("E011", span, f"in template: {exc}"))
                continue
            annotation = m.group(2).strip() if m.group(2) else None
            steps.append(IntentStep(intent=intent, annotation=annotation))
        return TemplateChain(steps=tuple(steps))

    if not text.strip():
        diags.append(error("E022", span, "template is empty"))
        return None, diags
    chain = parse_chain(text)
    if chain is not None and not chain.steps:
        return None, diags
    return chain, diags


def parse_template(text: str) -> TemplateChain:
    """Parse an intent chain such as `a -> b -> loop(c -> d)`.

    Raises TemplateSyntaxError on the first problem.
    """
    chain, diags = parse_template_diags(text, Span(1, 1, 1, max(len(text), 1) + 1))
    errors = [d for d in diags if d.is_error]
    if errors:
        raise TemplateSyntaxError(errors[0])
    assert chain is not None
    return chain


# -- entry points --------------------------------------------------------------


def parse_workflow(source: str) -> ParseResult:
    """Parse workflow source text into an AST plus diagnostics.

    Deterministic and total: malformed input yields a partial AST (or None if
    there is no workflow header to anchor one) and error diagnostics, never an
    exception.
    """
    diagnostics: list[Diagnostic] = []
    source = source.lstrip("﻿")
    lines = _Scanner(source, diagnostics).scan()
    parser = _Parser(lines, diagnostics)
    workflow = parser.parse_workflow()
    return ParseResult(workflow=workflow, diagnostics=diagnostics)


def parse_file(path) -> ParseResult:
    """Read a UTF-8 `.atwl` file and parse it."""
    with open(path, encoding="utf-8") as handle:
        return parse_workflow(handle.read())
