"""Command-line front end: ``tempoeval validate|score|merge|closure|stats``.

Exit codes: 0 success, 1 the check found errors, 2 usage or configuration
error, 3 I/O or parse failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .closure import InconsistentError, closed_links, closure, reduce
from .merging import ConfigError, MergeConfig, MergeError, merge_corpus
from .model import ModelError, RelationType
from .parallel import default_jobs
from .scoring import MatchMode, ScoreOptions, ScoringError, has_relations, score_corpora
from .stats import corpus_stats, format_stats
from .timeml import (
    CorpusLoadError,
    ParseError,
    Severity,
    StructuralError,
    format_issues,
    issue_from_exception,
    list_tml,
    load_corpus,
    parse_document,
    serialize_document,
    validate_document,
)

EXIT_OK, EXIT_FOUND, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("tempoeval")


def use_color() -> bool:
    return os.environ.get("TEMPOEVAL_COLOR", "0") == "1"


def _paint(text: str, code: str) -> str:
    return f"\033[{code}m{text}\033[0m" if use_color() else text


def _emit(text: str, stream=None) -> None:
    if text:
        print(text, file=stream or sys.stdout)


# --------------------------------------------------------------------------


def cmd_validate(args) -> int:
    issues, status = [], EXIT_OK
    checked = 0
    for target in args.paths:
        try:
            files = list_tml(target, args.recursive)
        except FileNotFoundError as exc:
            log.error("%s", exc)
            status = EXIT_IO
            continue
        for path in files:
            checked += 1
            try:
                doc = parse_document(Path(path).read_bytes(), check_references=False)
            except OSError as exc:
                log.error("cannot read %s: %s", path, exc)
                status = EXIT_IO
                continue
            except (ParseError, ModelError) as exc:
                issues.append(issue_from_exception(exc, Path(path).name))
                if not isinstance(exc, StructuralError) and isinstance(exc, ParseError):
                    status = EXIT_IO
                continue
            issues.extend(validate_document(doc, args.profile))

    if args.json:
        _emit(format_issues(issues, as_json=True))
    else:
        for issue in issues:
            color = "31" if issue.severity is Severity.ERROR else "33"
            _emit(_paint(issue.severity.value, color) + issue.format()[len(issue.severity.value):])
        if not args.quiet:
            errors = sum(i.severity is Severity.ERROR for i in issues)
            _emit(f"{checked} file(s), {errors} error(s), {len(issues) - errors} warning(s)", sys.stderr)
    if status == EXIT_IO:
        return EXIT_IO
    return EXIT_FOUND if any(i.severity is Severity.ERROR for i in issues) else EXIT_OK


def _load_or_fail(path, args):
    corpus = load_corpus(path, recursive=getattr(args, "recursive", False), jobs=args.jobs)
    if corpus.failures:
        raise CorpusLoadError(*corpus.failures[0])
    return corpus


def cmd_score(args) -> int:
    tasks = ("A", "B", "C") if args.task == "all" else (args.task,)
    try:
        ref = _load_or_fail(args.reference, args)
        resp = _load_or_fail(args.response, args)
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    if args.task == "C" and not (has_relations(ref.documents) and has_relations(resp.documents)):
        log.error("task C needs relation links (TLINKs other than NONE) in both reference and response")
        return EXIT_USAGE
    options = ScoreOptions(tasks=tasks, mode=MatchMode(args.mode), all_attributes=args.all_attributes,
                           reduce=not args.no_reduce, jobs=args.jobs)
    try:
        report = score_corpora(ref, resp, options)
    except ScoringError as exc:
        log.error("%s", exc)
        return EXIT_FOUND
    for warning in report.warnings:
        log.warning("%s", warning)
    _emit(report.dumps() if args.json else report.format_table(color=use_color()))
    return EXIT_OK


def cmd_merge(args) -> int:
    try:
        config = MergeConfig.from_json(args.config)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO
    try:
        summary = merge_corpus(config, args.out, repair=not args.no_repair, jobs=args.jobs)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except MergeError as exc:
        log.error("%s", exc)
        return EXIT_FOUND
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    if args.json:
        _emit(json.dumps(summary, indent=2))
    else:
        lines = [f"merged {summary['documents']} document(s) into {args.out}"]
        for d in summary["per_document"]:
            e, l = d["entities"], d["links"]
            lines.append(f"{d['doc_id']}: entities kept {e['kept']} dropped {e['dropped']}; links kept {l['kept']} "
                         f"dropped {l['dropped']} conflicted {l['conflicted']} repaired {l['repaired']}"
                         + ("" if d["consistent"] else " INCONSISTENT"))
        _emit("\n".join(lines))
    inconsistent = [d["doc_id"] for d in summary["per_document"] if not d["consistent"]]
    return EXIT_FOUND if inconsistent else EXIT_OK


def cmd_closure(args) -> int:
    try:
        doc = parse_document(Path(args.file).read_bytes())
    except OSError as exc:
        log.error("cannot read %s: %s", args.file, exc)
        return EXIT_IO
    except (ParseError, ModelError) as exc:
        log.error("%s: %s", args.file, exc)
        return EXIT_IO

    relations = [l for l in doc.links if l.relation is not RelationType.NONE]
    entity_ids = doc.entity_ids()
    try:
        closed = closure(relations, entity_ids)
    except InconsistentError as exc:
        if args.json:
            _emit(json.dumps({"doc_id": doc.doc_id, "consistent": False,
                              "witness": [str(s) for s in exc.witness]}, indent=2))
        else:
            _emit(f"{doc.doc_id}: {_paint('inconsistent', '31')}")
            for step in exc.witness:
                _emit(f"  {step}")
        return EXIT_FOUND

    if not args.emit:
        if args.json:
            _emit(json.dumps({"doc_id": doc.doc_id, "consistent": True, "links": len(relations)}, indent=2))
        else:
            _emit(f"{doc.doc_id}: consistent")
        return EXIT_OK

    placeholders = [l for l in doc.links if l.relation is RelationType.NONE]
    if args.reduced:
        derived = reduce(relations, entity_ids)
    else:
        derived = closed_links(closed, relations + placeholders)
    out = replace(doc, links=placeholders + derived)
    text = serialize_document(out)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_stats(args) -> int:
    rows, status = [], EXIT_OK
    for target in args.paths:
        path = Path(target)
        try:
            if path.is_dir():
                corpus = load_corpus(path, recursive=args.recursive, jobs=args.jobs)
                docs, failures = corpus.documents, len(corpus.failures)
            else:
                docs, failures = [parse_document(path.read_bytes())], 0
        except (OSError, ParseError, ModelError) as exc:
            log.error("%s: %s", target, exc)
            status = EXIT_IO
            continue
        if failures:
            status = EXIT_IO
        rows.append(corpus_stats(docs, str(target), failures))
    if args.json:
        _emit(json.dumps([r.to_json() for r in rows], indent=2))
    else:
        _emit(format_stats(rows))
    return status


# --------------------------------------------------------------------------


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--json", action="store_true", default=default(False), help="machine-readable output")
    parser.add_argument("--jobs", type=int, default=default(default_jobs()), metavar="N",
                        help="worker processes for per-document work")
    parser.add_argument("--quiet", action="store_true", default=default(False), help="suppress warnings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tempoeval", description="TempEval-3 datafile toolkit")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        _global_flags(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = add("validate", cmd_validate, "check datafiles for format and annotation problems")
    p.add_argument("paths", nargs="+", help=".tml files or directories")
    p.add_argument("--profile", choices=("structural", "gold"), default="structural")
    p.add_argument("--recursive", action="store_true")

    p = add("score", cmd_score, "score a response corpus against a reference corpus")
    p.add_argument("--reference", required=True, metavar="DIR")
    p.add_argument("--response", required=True, metavar="DIR")
    p.add_argument("--task", choices=("A", "B", "C", "all"), default="all")
    p.add_argument("--mode", choices=("strict", "relaxed"), default="relaxed")
    p.add_argument("--all-attributes", action="store_true", help="also score tense, aspect, polarity, modality, pos")
    p.add_argument("--no-reduce", action="store_true", help="score raw link sets instead of their reductions")

    p = add("merge", cmd_merge, "merge several systems' annotations into one corpus")
    p.add_argument("--config", required=True, metavar="FILE")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--no-repair", action="store_true", help="keep inconsistent merged links")

    p = add("closure", cmd_closure, "check or expand the temporal closure of a document")
    p.add_argument("file")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--check", action="store_true", help="report consistency (default)")
    mode.add_argument("--emit", action="store_true", help="write the document with its closed link set")
    p.add_argument("--reduced", action="store_true", help="with --emit, write the non-redundant core instead")
    p.add_argument("-o", "--output", metavar="FILE")

    p = add("stats", cmd_stats, "token, entity and link counts per corpus")
    p.add_argument("paths", nargs="+", metavar="DIR")
    p.add_argument("--recursive", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
