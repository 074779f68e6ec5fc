"""Structured diagnostics: codes, severities, source spans.

Error codes are E0xx, warnings W1xx. The full catalog lives in
docs/diagnostics.md; `CATALOG` below is the machine-readable registry and the
single source of truth for which codes exist.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"

    def __str__(self) -> str:  # pragma: no cover - trivial
        return self.value


@dataclass(frozen=True, order=True)
class Span:
    """Half-open source region, 1-indexed lines and columns."""

    line: int
    column: int
    end_line: int
    end_column: int

    def contains(self, other: "Span") -> bool:
        return (self.line, self.column) <= (other.line, other.column) and (
            other.end_line,
            other.end_column,
        ) <= (self.end_line, self.end_column)


def point_span(line: int, column: int) -> Span:
    return Span(line, column, line, column + 1)


CATALOG: dict[str, str] = {
    # Validity and semantic errors
    "E001": "duplicate identifier",
    "E002": "transform input references an undeclared artifact",
    "E003": "artifact with origin: given appears as a transform output",
    "E004": "input-output dependency cycle (not sanctioned by assignment)",
    "E005": "assignment target or source is undeclared",
    "E006": "transform output has no artifact declaration",
    "E007": "exit directive does not name an enclosing loop",
    "E008": "parenthesised or context reference to an undeclared artifact",
    "E009": "assignment binds an identifier to itself",
    "E010": "missing required field",
    "E011": "invalid keyword for a closed vocabulary",
    "E012": "artifact type does not admit parenthesised references",
    # Parse and lex errors
    "E020": "illegal character",
    "E021": "bad indentation",
    "E022": "malformed statement (expected 'key: value')",
    "E023": "unrecognised statement",
    "E024": "duplicate workflow header",
    "E025": "missing workflow header",
    "E026": "unbalanced parentheses",
    "E027": "trailing comma in identifier list",
    "E028": "unterminated quoted string",
    "E029": "exit directive outside a conditional branch",
    "E030": "missing or mismatched 'end loop'",
    "E031": "missing artifact type",
    # Warnings
    "W101": "workflow has an empty body",
    "W102": "declaration has no description",
    "W110": "unknown field key (preserved verbatim)",
    "W120": "output artifact type is atypical for the transform's intent",
    "W130": "artifact declared in one conditional branch is used in the other",
    "W140": "declared template does not match the extracted intent chain",
}


@dataclass(frozen=True)
class Diagnostic:
    """One validation or parse finding."""

    code: str
    severity: Severity
    span: Span
    message: str
    related: tuple[tuple[Span, str], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.code not in CATALOG:
            raise ValueError(f"diagnostic code {self.code} is not in the catalog")

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def format(self, file: str | None = None) -> str:
        """Human-readable one-liner, `file:line:col: severity[code]: message`."""
        prefix = f"{file}:" if file else ""
        out = (
            f"{prefix}{self.span.line}:{self.span.column}: "
            f"{self.severity.value}[{self.code}]: {self.message}"
        )
        for span, note in self.related:
            out += f"\n{prefix}{span.line}:{span.column}: note: {note}"
        return out

    def to_json_dict(self, file: str | None = None) -> dict:
        """Machine-readable form used by the JSON-lines output mode."""
        payload = {
            "code": self.code,
            "severity": self.severity.value,
            "file": file,
            "line": self.span.line,
            "column": self.span.column,
            "message": self.message,
        }
        if self.related:
            payload["related"] = [
                {"line": s.line, "column": s.column, "note": n} for s, n in self.related
            ]
        return payload


def error(code: str, span: Span, message: str, related: tuple[tuple[Span, str], ...] = ()) -> Diagnostic:
    return Diagnostic(code, Severity.ERROR, span, message, related)


def warning(code: str, span: Span, message: str, related: tuple[tuple[Span, str], ...] = ()) -> Diagnostic:
    return Diagnostic(code, Severity.WARNING, span, message, related)


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(d.is_error for d in diagnostics)
