"""Toolchain for the Artifact-Transform Workflow Language (ATWL).

Parses, validates, analyzes, compares, and renders `.atwl` workflow files:
typed artifact/transform declarations with loops, conditionals, and
assignments, plus structural analyses (building blocks, loop taxonomy,
meta-structure stages, construct coverage) and DOT/Mermaid/JSON emission.
"""

__version__ = "0.1.0"

from atwl.diagnostics import Diagnostic, Severity, Span
from atwl.syntax import ParseResult, Workflow, parse_file, parse_template, parse_workflow, print_canonical

__all__ = [
    "Diagnostic",
    "ParseResult",
    "Severity",
    "Span",
    "Workflow",
    "__version__",
    "parse_file",
    "parse_template",
    "parse_workflow",
    "print_canonical",
]
