"""Surface syntax: AST nodes, parser, and canonical printer."""

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
    TemplateStep,
    TransformDecl,
    UnknownField,
    Workflow,
    walk_items,
)
from atwl.syntax.parser import (
    ParseResult,
    TemplateSyntaxError,
    parse_file,
    parse_template,
    parse_workflow,
)
from atwl.syntax.printer import format_template, print_canonical

__all__ = [
    "ArtifactDecl",
    "Assignment",
    "Binding",
    "BodyItem",
    "Conditional",
    "ExitDirective",
    "FeatureDecl",
    "IntentStep",
    "LoopDecl",
    "LoopStep",
    "ParseResult",
    "TemplateChain",
    "TemplateStep",
    "TemplateSyntaxError",
    "TransformDecl",
    "UnknownField",
    "Workflow",
    "format_template",
    "parse_file",
    "parse_template",
    "parse_workflow",
    "print_canonical",
    "walk_items",
]
