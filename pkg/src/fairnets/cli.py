"""Command-line entry point.

Exit codes: 0 ok, 1 a requested FAIR metric failed, 2 input or usage error,
3 IRI collision, 4 strict evaluation with a missing manifest, 5 fetch failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import SUBJECT_GRAMMAR, __version__
from .audit import EvalError, Status, corpus_accuracy, corpus_stats, fair_report
from .config import ConfigError, Settings, load_settings
from .corpus import build_corpus, evaluate_corpus, process_repository
from .graph import IriCollision, descriptor_to_json, vocabulary_graph
from .inference import IntendedUse, NetworkType
from .ingest import FetchError, GitHubClient, IngestError, RateLimited, RepoNotFound
from .query import QueryError, QueryFilter, query_graph
from .rdf import KnowledgeGraph, TurtleSyntaxError, parse_turtle, serialize_turtle
from .vocab import build_vocabulary

EXIT_OK, EXIT_FAIR, EXIT_INPUT, EXIT_COLLISION, EXIT_STRICT, EXIT_FETCH = 0, 1, 2, 3, 4, 5
GRAPH_FILE = "fairnets.ttl"
VOID_FILE = "fairnets_void.ttl"


class UsageError(Exception):
    pass


def _common(defaults: bool) -> argparse.ArgumentParser:
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", choices=("json", "table", "ttl"), default=d(None), help="output format")
    p.add_argument("--jobs", type=int, default=d(1), help="worker count for corpus runs")
    p.add_argument("--strict", action="store_true", default=d(False), help="treat missing manifests as errors")
    p.add_argument("--no-wait", action="store_true", default=d(False), help="fail instead of waiting on rate limits")
    p.add_argument("--config", default=d(None), help="settings file (default ./fairnets.toml if present)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairnets", parents=[_common(True)],
                                     description="Extract Keras architectures into a FAIR RDF knowledge graph.")
    grammar = ".".join(map(str, SUBJECT_GRAMMAR))
    parser.add_argument("--version", action="version", version=f"fairnets {__version__} (subject grammar: Python {grammar})")
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_common(False)]

    p = sub.add_parser("extract", parents=common, help="descriptors and diagnostics for one repository")
    p.add_argument("repo_dir")

    p = sub.add_parser("build", parents=common, help="build graph and VoID files from a corpus")
    p.add_argument("corpus_dir")
    p.add_argument("--out", required=True)

    p = sub.add_parser("query", parents=common, help="filter networks in a graph")
    p.add_argument("graph")
    p.add_argument("--type", choices=[t.value for t in NetworkType])
    p.add_argument("--year", type=int)
    p.add_argument("--license")
    p.add_argument("--layer")
    p.add_argument("--creator")
    p.add_argument("--use", choices=[u.value.lower() for u in IntendedUse])

    p = sub.add_parser("stats", parents=common, help="corpus statistics of a graph")
    p.add_argument("graph")

    p = sub.add_parser("fair-check", parents=common, help="offline FAIR metric report")
    p.add_argument("graph")
    p.add_argument("--void", help="VoID file (default: fairnets_void.ttl next to the graph)")
    p.add_argument("--metric", action="append", help="restrict the exit status to these metric ids")

    p = sub.add_parser("eval", parents=common, help="compare extracted architectures with manifests")
    p.add_argument("corpus_dir")

    p = sub.add_parser("fetch", parents=common, help="materialize a corpus entry from the hosting API")
    p.add_argument("full_name")
    p.add_argument("--out", required=True)
    p.add_argument("--token", help="API token (default: FAIRNETS_GITHUB_TOKEN)")

    p = sub.add_parser("vocab", parents=common, help="export the embedded vocabulary")
    p.add_argument("--counts", action="store_true", help="print term counts instead of Turtle")
    return parser


# --------------------------------------------------------------------------
# output helpers


def table(rows: list[list], header: list[str]) -> str:
    cells = [[str(c) for c in header]] + [["" if c is None else str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def emit_json(obj, out) -> None:
    out.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_graph(path: Path) -> KnowledgeGraph:
    try:
        return parse_turtle(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except TurtleSyntaxError as exc:
        raise UsageError(f"{path}: {exc}") from None


def resolve_graph(arg: str, args, settings: Settings, with_void: bool = False) -> KnowledgeGraph:
    """A graph from a Turtle file, a build output directory, or a corpus directory."""
    path = Path(arg)
    if path.is_file():
        g = load_graph(path)
        if with_void:
            void = Path(args.void) if getattr(args, "void", None) else path.with_name(VOID_FILE)
            if void.is_file():
                g = g | load_graph(void)
        return g
    if path.is_dir() and (path / GRAPH_FILE).is_file():
        g = load_graph(path / GRAPH_FILE)
        if with_void and (path / VOID_FILE).is_file():
            g = g | load_graph(path / VOID_FILE)
        return g
    if path.is_dir():
        built = build_corpus(path, args.jobs, settings)
        return built.merged if with_void else built.graph
    raise UsageError(f"no graph at {arg}")


# --------------------------------------------------------------------------
# commands


def cmd_extract(args, settings, out, err) -> int:
    repo = Path(args.repo_dir)
    if not repo.is_dir():
        raise UsageError(f"not a directory: {repo}")
    result = process_repository(repo, settings)
    for d in result.descriptors:
        out.write(json.dumps(descriptor_to_json(d), sort_keys=True) + "\n")
    for diag in result.diagnostics:
        err.write(json.dumps(diag, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_build(args, settings, out, err) -> int:
    corpus = Path(args.corpus_dir)
    if not corpus.is_dir():
        raise UsageError(f"not a directory: {corpus}")
    built = build_corpus(corpus, args.jobs, settings)
    target = Path(args.out)
    target.mkdir(parents=True, exist_ok=True)
    (target / GRAPH_FILE).write_bytes(serialize_turtle(built.graph).encode("utf-8"))
    (target / VOID_FILE).write_bytes(serialize_turtle(built.void).encode("utf-8"))
    for r in built.repos:
        for diag in r.diagnostics:
            if diag["severity"] == "error":
                err.write(json.dumps(diag, sort_keys=True) + "\n")
    skipped = sum(1 for r in built.repos if r.error)
    out.write(
        f"built {built.networks} networks from {len(built.repos) - skipped} repositories "
        f"({len(built.graph)} triples, {skipped} skipped) -> {target / GRAPH_FILE}\n"
    )
    return EXIT_OK


def cmd_query(args, settings, out, err) -> int:
    f = QueryFilter(
        type=NetworkType(args.type) if args.type else None,
        year_created=args.year,
        license=args.license,
        layer=args.layer,
        creator=args.creator,
        intended_use=IntendedUse(args.use.capitalize()) if args.use else None,
    )
    if f.is_empty():
        raise UsageError("query needs at least one of --type --year --license --layer --creator --use")
    g = resolve_graph(args.graph, args, settings)
    rows = query_graph(g, f)
    fmt = args.format or "table"
    if fmt == "json":
        emit_json([r.to_json() for r in rows], out)
    elif fmt == "ttl":
        keep = {r.iri for r in rows}
        layers = {t.object for t in g.triples if t.subject in keep and t.predicate.endswith("#hasLayer")}
        sub = KnowledgeGraph({t for t in g.triples if t.subject in keep or t.subject in layers}, dict(g.prefixes))
        out.write(serialize_turtle(sub))
    else:
        out.write(table([[r.iri, r.label, r.type.value, r.created] for r in rows], ["iri", "label", "type", "created"]) + "\n")
        out.write(f"{len(rows)} networks\n")
    return EXIT_OK


def cmd_stats(args, settings, out, err) -> int:
    report = corpus_stats(resolve_graph(args.graph, args, settings))
    if (args.format or "table") == "json":
        emit_json(report.to_json(), out)
        return EXIT_OK
    rows = [["repositories", report.repositories, ""], ["unique users", report.unique_users, ""],
            ["neural networks", report.networks, ""]]
    rows += [[f"  {t.value}", c, f"{p}%"] for t, (c, p) in report.per_type.items()]
    if report.untyped:
        rows.append(["untyped nodes", report.untyped, ""])
    out.write(table(rows, ["figure", "count", "share"]) + "\n")
    return EXIT_OK


def cmd_fair_check(args, settings, out, err) -> int:
    report = fair_report(resolve_graph(args.graph, args, settings, with_void=True))
    requested = set(args.metric or [e.metric_id for e in report.entries])
    unknown = requested - {e.metric_id for e in report.entries}
    if unknown:
        raise UsageError(f"unknown metric ids: {', '.join(sorted(unknown))}")
    if (args.format or "table") == "json":
        emit_json(report.to_json(), out)
    else:
        rows = [[e.metric_id, e.name, e.status.value, e.reference_status, json.dumps(e.evidence, sort_keys=True)]
                for e in report.entries]
        out.write(table(rows, ["metric", "name", "status", "published", "evidence"]) + "\n")
        c = report.counts()
        out.write(f"{c['Pass']} pass, {c['Fail']} fail, {c['NotCheckableOffline']} not checkable offline\n")
    failed = [e for e in report.entries if e.metric_id in requested and e.status is Status.FAIL]
    return EXIT_FAIR if failed else EXIT_OK


def cmd_eval(args, settings, out, err) -> int:
    corpus = Path(args.corpus_dir)
    if not corpus.is_dir():
        raise UsageError(f"not a directory: {corpus}")
    result = evaluate_corpus(corpus, args.jobs, settings)
    for problem in result.errors:
        err.write(f"error: {problem}\n")
    for missing in result.missing:
        err.write(f"missing manifest: {missing}\n")
    try:
        accuracy = corpus_accuracy([p.comparison for p in result.pairs])
    except EvalError:
        accuracy = None
    if (args.format or "table") == "json":
        emit_json({
            "accuracy": accuracy,
            "pairs": [{"repo": p.repo, "source_file": p.source_file, "model_ordinal": p.model_ordinal,
                       "manifest": p.manifest, "exact_match": p.comparison.exact_match,
                       "lcs_ratio": p.comparison.lcs_ratio} for p in result.pairs],
            "missing": result.missing,
        }, out)
    else:
        rows = [[p.repo, p.source_file, p.model_ordinal, "yes" if p.comparison.exact_match else "no",
                 f"{p.comparison.lcs_ratio:.3f}"] for p in result.pairs]
        out.write(table(rows, ["repository", "file", "model", "exact", "lcs"]) + "\n")
        out.write("accuracy: n/a\n" if accuracy is None else f"accuracy: {accuracy:.2f} ({sum(p.comparison.exact_match for p in result.pairs)}/{len(result.pairs)})\n")
    if args.strict and result.missing:
        return EXIT_STRICT
    return EXIT_OK


def cmd_fetch(args, settings, out, err) -> int:
    client = GitHubClient(token=args.token, wait_on_rate_limit=not args.no_wait)
    raw = client.fetch_repository(args.full_name)
    target = Path(args.out) / args.full_name.replace("/", "__")
    (target / "src").mkdir(parents=True, exist_ok=True)
    (target / "metadata.json").write_text(json.dumps(raw.metadata, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (target / "README.md").write_text(raw.readme_text, encoding="utf-8")
    ref = raw.metadata.get("default_branch")
    files = client.python_files(args.full_name, ref)
    for rel in files:
        dest = (target / "src" / rel).resolve()
        if not str(dest).startswith(str((target / "src").resolve())):
            continue
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_bytes(client.file_bytes(args.full_name, rel, ref))
    out.write(f"fetched {args.full_name}: {len(files)} source files -> {target}\n")
    return EXIT_OK


def cmd_vocab(args, settings, out, err) -> int:
    vocab = build_vocabulary()
    if args.counts:
        counts = dict(vocab.counts(), triples=len(vocabulary_graph(vocab)))
        if (args.format or "table") == "json":
            emit_json(counts, out)
        else:
            out.write(table([[k, v] for k, v in counts.items()], ["terms", "count"]) + "\n")
        return EXIT_OK
    out.write(serialize_turtle(vocabulary_graph(vocab)))
    return EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "build": cmd_build,
    "query": cmd_query,
    "stats": cmd_stats,
    "fair-check": cmd_fair_check,
    "eval": cmd_eval,
    "fetch": cmd_fetch,
    "vocab": cmd_vocab,
}


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        settings = load_settings(args.config)
        return COMMANDS[args.command](args, settings, out, err)
    except IriCollision as exc:
        err.write(f"error: {exc}\n")
        return EXIT_COLLISION
    except RepoNotFound as exc:
        err.write(f"error: RepoNotFound: {exc}\n")
        return EXIT_FETCH
    except RateLimited as exc:
        err.write(f"error: RateLimited: {exc}\n")
        return EXIT_FETCH
    except FetchError as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_FETCH
    except (UsageError, QueryError, ConfigError, IngestError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
