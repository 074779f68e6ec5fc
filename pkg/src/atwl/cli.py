"""Command-line front end.

Commands: check, fmt, graph, analyze, template, corpus scan, corpus query,
export. Exit codes: 0 success, 1 diagnostics contained errors, 2 usage error,
3 I/O failure. Results go to stdout; in human mode diagnostics go to stderr,
with `--json` they go to stdout as JSON lines for toolchain composition.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from atwl import __version__
from atwl.analysis import (
    analyze_workflow,
    coverage_to_csv,
    query_blocks,
    scan_corpus,
)
from atwl.diagnostics import Diagnostic, has_errors
from atwl.emit import (
    analysis_to_dict,
    block_match_to_dict,
    corpus_to_dict,
    loop_classification_to_dict,
    stage_report_to_dict,
    template_report_to_dict,
    to_dot,
    to_json,
    to_mermaid,
)
from atwl.graph import compare_template, extract_intent_chain
from atwl.semantics import check_workflow
from atwl.syntax import parse_file, print_canonical
from atwl.syntax.printer import format_template

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_USAGE = 2
EXIT_IO = 3


class _Session:
    """Holds output mode and accumulates the final exit code."""

    def __init__(self, json_mode: bool):
        self.json_mode = json_mode
        self.saw_errors = False
        self.saw_io_failure = False

    def emit_diagnostics(self, file: str, diagnostics: list[Diagnostic]) -> None:
        if has_errors(diagnostics):
            self.saw_errors = True
        for diag in diagnostics:
            if self.json_mode:
                print(json.dumps(diag.to_json_dict(file), sort_keys=True))
            else:
                print(diag.format(file), file=sys.stderr)

    def io_failure(self, path: str, exc: OSError) -> None:
        self.saw_io_failure = True
        print(f"{path}: i/o error: {exc.strerror or exc}", file=sys.stderr)

    @property
    def exit_code(self) -> int:
        if self.saw_io_failure:
            return EXIT_IO
        if self.saw_errors:
            return EXIT_DIAGNOSTICS
        return EXIT_OK


def _load(path: str, session: _Session):
    """Parse and check one file; returns (workflow, diagnostics) or None on I/O."""
    try:
        result = parse_file(path)
    except OSError as exc:
        session.io_failure(path, exc)
        return None
    diagnostics = list(result.diagnostics)
    if result.workflow is not None:
        diagnostics.extend(check_workflow(result.workflow))
    return result.workflow, diagnostics


def _write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _gather_paths(inputs: list[str], session: _Session) -> list[str]:
    """Expand directories to their `.atwl` files, recursively."""
    paths: list[str] = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            paths.extend(str(f) for f in sorted(p.rglob("*.atwl")))
        elif p.exists():
            paths.append(str(p))
        else:
            session.io_failure(item, FileNotFoundError(2, "no such file or directory"))
    return paths


# -- commands -----------------------------------------------------------------


def _cmd_check(args, session: _Session) -> None:
    for path in args.files:
        loaded = _load(path, session)
        if loaded is None:
            continue
        _workflow, diagnostics = loaded
        session.emit_diagnostics(path, diagnostics)
        if not session.json_mode:
            errors = sum(1 for d in diagnostics if d.is_error)
            warnings = len(diagnostics) - errors
            print(f"{path}: {errors} error(s), {warnings} warning(s)")


def _cmd_fmt(args, session: _Session) -> None:
    for path in args.files:
        loaded = _load(path, session)
        if loaded is None:
            continue
        workflow, diagnostics = loaded
        errors = [d for d in diagnostics if d.is_error]
        if errors or workflow is None:
            session.emit_diagnostics(path, errors)
            continue
        text = print_canonical(workflow)
        if args.in_place:
            Path(path).write_text(text, encoding="utf-8")
        else:
            _write_output(text, args.output)


def _cmd_graph(args, session: _Session) -> None:
    loaded = _load(args.file, session)
    if loaded is None:
        return
    workflow, diagnostics = loaded
    if has_errors(diagnostics) or workflow is None:
        session.emit_diagnostics(args.file, diagnostics)
        return
    analysis = analyze_workflow(workflow)
    render = to_dot if args.format == "dot" else to_mermaid
    _write_output(
        render(workflow, analysis.graph, include_references=args.include_reference_edges),
        args.output,
    )


def _cmd_analyze(args, session: _Session) -> None:
    loaded = _load(args.file, session)
    if loaded is None:
        return
    workflow, diagnostics = loaded
    if has_errors(diagnostics) or workflow is None:
        session.emit_diagnostics(args.file, diagnostics)
        return
    analysis = analyze_workflow(workflow)
    sections = [s for s in ("coverage", "blocks", "loops", "stages") if getattr(args, s)]
    if not sections:
        sections = ["coverage", "blocks", "loops", "stages"]
    if session.json_mode:
        full = analysis_to_dict(analysis)
        keep = {"coverage": "coverage", "blocks": "blocks",
                "loops": "loop_classes", "stages": "stages"}
        payload = {"version": full["version"], "workflow": full["workflow"]}
        for section in sections:
            payload[keep[section]] = full[keep[section]]
        print(json.dumps(payload, sort_keys=True, indent=2))
        return
    if "coverage" in sections:
        row = analysis.coverage
        print(f"workflow: {row.workflow_id}")
        print("artifact types:", ", ".join(sorted(t.keyword for t in row.artifact_types)) or "-")
        print("intents:", ", ".join(sorted(i.keyword for i in row.intents)) or "-")
        print(f"loops: {row.loop_count}  nested: {'yes' if row.nested_loops else 'no'}")
    if "blocks" in sections:
        print("building blocks:")
        if not analysis.blocks:
            print("  (none)")
        for match in analysis.blocks:
            bindings = ", ".join(f"{role}={name}" for role, name in match.bindings)
            print(f"  {match.block_id} [{match.scope}] {bindings}")
    if "loops" in sections:
        print("loops:")
        if not analysis.loop_classes:
            print("  (none)")
        for item in analysis.loop_classes:
            print(f"  {item.loop_name}: {item.category} / {item.type_label}")
    if "stages" in sections:
        report = analysis.stage_report
        print(f"stages (entry mode: {report.entry_mode}):")
        flags = dict(report.flags)
        for name, stage in report.stages:
            extra = f"  [{flags[name]}]" if name in flags else ""
            print(f"  {name}: stage {stage}{extra}")
        print("stage presence:", ", ".join(str(s) for s in sorted(report.presence)) or "-")


def _cmd_template(args, session: _Session) -> None:
    loaded = _load(args.file, session)
    if loaded is None:
        return
    workflow, diagnostics = loaded
    if has_errors(diagnostics) or workflow is None:
        session.emit_diagnostics(args.file, diagnostics)
        return
    extracted = extract_intent_chain(workflow)
    if workflow.template is None:
        if session.json_mode:
            print(json.dumps({"declared": None, "extracted": format_template(extracted),
                              "verdict": None}, sort_keys=True))
        else:
            print("no declared template")
            print(f"extracted: {format_template(extracted)}")
        return
    report = compare_template(workflow.template, extracted)
    if report.verdict == "mismatch":
        from atwl.diagnostics import warning

        session.emit_diagnostics(
            args.file,
            [warning("W140", workflow.span,
                     "declared template does not match the extracted intent chain: "
                     + "; ".join(report.notes))],
        )
    if session.json_mode:
        print(json.dumps(template_report_to_dict(report), sort_keys=True, indent=2))
    else:
        print(f"declared:  {format_template(report.declared)}")
        print(f"extracted: {format_template(report.extracted)}")
        print(f"verdict: {report.verdict}")
        for note in report.notes:
            print(f"note: {note}")


def _cmd_corpus_scan(args, session: _Session) -> None:
    paths = _gather_paths(args.paths, session)
    index = scan_corpus(paths)
    if args.csv:
        sys.stdout.write(coverage_to_csv(index.coverage_rows()))
        return
    if session.json_mode:
        print(json.dumps(corpus_to_dict(index), sort_keys=True, indent=2))
        return
    for key, entry in index.entries.items():
        status = "ok" if entry.ok else f"errors={entry.error_count} codes={','.join(entry.codes)}"
        blocks = ",".join(sorted({m.block_id for m in entry.blocks})) or "-"
        print(f"{key}: {entry.path} [{status}] blocks: {blocks}")


def _cmd_corpus_query(args, session: _Session) -> None:
    paths = _gather_paths(args.paths, session)
    index = scan_corpus(paths)
    try:
        hits = query_blocks(
            index,
            block_id=args.block,
            consumes=tuple(args.consumes or ()),
            produces=tuple(args.produces or ()),
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        session.saw_errors = True
        return
    if session.json_mode:
        payload = [
            {"workflow": workflow_id, **block_match_to_dict(match)}
            for workflow_id, match in hits
        ]
        print(json.dumps(payload, sort_keys=True, indent=2))
        return
    if not hits:
        print("(no matches)")
    for workflow_id, match in hits:
        bindings = ", ".join(f"{role}={name}" for role, name in match.bindings)
        print(f"{workflow_id}: {match.block_id} [{match.scope}] {bindings}")


def _cmd_export(args, session: _Session) -> None:
    loaded = _load(args.file, session)
    if loaded is None:
        return
    workflow, diagnostics = loaded
    if has_errors(diagnostics) or workflow is None:
        session.emit_diagnostics(args.file, diagnostics)
        return
    _write_output(to_json(workflow), args.output)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atwl",
        description="Parse, validate, analyze, and render ATWL workflow files.",
    )
    parser.add_argument("--version", action="version", version=f"atwl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="run all diagnostics over files")
    p_check.add_argument("files", nargs="+")
    p_check.add_argument("--json", action="store_true", help="JSON-lines diagnostics on stdout")

    p_fmt = sub.add_parser("fmt", help="print the canonical form")
    p_fmt.add_argument("files", nargs="+")
    p_fmt.add_argument("--in-place", action="store_true")
    p_fmt.add_argument("-o", "--output")
    p_fmt.add_argument("--json", action="store_true", help=argparse.SUPPRESS)

    p_graph = sub.add_parser("graph", help="emit a flow diagram")
    p_graph.add_argument("file")
    p_graph.add_argument("--format", choices=("dot", "mermaid"), default="dot")
    p_graph.add_argument("--include-reference-edges", action="store_true")
    p_graph.add_argument("-o", "--output")
    p_graph.add_argument("--json", action="store_true", help=argparse.SUPPRESS)

    p_analyze = sub.add_parser("analyze", help="blocks, loops, stages, coverage")
    p_analyze.add_argument("file")
    for flag in ("coverage", "blocks", "loops", "stages"):
        p_analyze.add_argument(f"--{flag}", action="store_true")
    p_analyze.add_argument("--json", action="store_true")

    p_template = sub.add_parser("template", help="verify the declared template")
    p_template.add_argument("file")
    p_template.add_argument("--json", action="store_true")

    p_corpus = sub.add_parser("corpus", help="scan or query a workflow corpus")
    corpus_sub = p_corpus.add_subparsers(dest="corpus_command", required=True)
    p_scan = corpus_sub.add_parser("scan", help="index files or directories")
    p_scan.add_argument("paths", nargs="+")
    p_scan.add_argument("--json", action="store_true")
    p_scan.add_argument("--csv", action="store_true", help="coverage table as CSV")
    p_query = corpus_sub.add_parser("query", help="find building-block matches")
    p_query.add_argument("paths", nargs="+")
    p_query.add_argument("--block")
    p_query.add_argument("--consumes", action="append")
    p_query.add_argument("--produces", action="append")
    p_query.add_argument("--json", action="store_true")

    p_export = sub.add_parser("export", help="canonical JSON AST")
    p_export.add_argument("file")
    p_export.add_argument("-o", "--output")
    p_export.add_argument("--json", action="store_true", help=argparse.SUPPRESS)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    session = _Session(json_mode=getattr(args, "json", False))
    handlers = {
        "check": _cmd_check,
        "fmt": _cmd_fmt,
        "graph": _cmd_graph,
        "analyze": _cmd_analyze,
        "template": _cmd_template,
        "export": _cmd_export,
    }
    try:
        if args.command == "corpus":
            if args.corpus_command == "scan":
                _cmd_corpus_scan(args, session)
            else:
                _cmd_corpus_query(args, session)
        else:
            handlers[args.command](args, session)
    except OSError as exc:
        session.io_failure(getattr(exc, "filename", "") or "?", exc)
    return session.exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
