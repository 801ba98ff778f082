"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 metric precondition
violated. Diagnostics go to stderr as a single line; reports go to stdout or
``--out``.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .chunk_metrics import GoldSegmentation, evaluate
from .chunker import ChunkConfig, chunk_text, chunks_from_dict, chunks_to_dict
from .errors import InputError, PreconditionError, TranslossError
from .graph_mapping import MatchConfig, exhaustive_best_mapping, parse_mapping
from .graph_model import infer_interfaces, parse_graph, graph_to_dict
from .lexer import Dialect
from .loss_metrics import LossWeights, compare
from .metadata_extract import MetadataRecord, ObjectType, extract, resolve_externals, to_graph
from .retrieval import Index, RetrievalConfig, retrieve
from .text_metrics import Metric, entity_recall, parse_judgments, score

PROG = "transloss"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _dialect(value: str) -> Dialect:
    try:
        return Dialect.parse(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _unit(value: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from None
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1]: {value}")
    return x


def _positive(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if n <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {value}")
    return n


def _non_negative(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError(f"must not be negative: {value}")
    return n


# file helpers

def _located(path: str | Path, fn: Callable[[], Any]) -> Any:
    """Run ``fn`` and tag any input error with the file it came from."""
    try:
        return fn()
    except InputError as exc:
        if getattr(exc, "file", None) is None:
            exc.file = str(path)
        raise


def _read_bytes(path: str | Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        err = InputError(f"cannot read file: {exc.strerror}")
        err.file = str(path)
        raise err from None


def _read_json(path: str | Path) -> Any:
    raw = _read_bytes(path)
    try:
        return json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        err = InputError(f"not UTF-8 at byte {exc.start}")
        err.offset = exc.start
    except json.JSONDecodeError as exc:
        err = InputError(f"invalid JSON at byte {exc.pos}: {exc.msg}")
        err.offset = exc.pos
    err.file = str(path)
    raise err


def _as_list(doc: Any) -> list:
    return doc if isinstance(doc, list) else [doc]


def _resolve_source(file: str, relative_to: str | Path) -> Path:
    p = Path(file)
    if p.is_file():
        return p
    alt = Path(relative_to).parent / file
    if alt.is_file():
        return alt
    err = InputError(f"source file {file!r} named in the document was not found")
    err.file = str(relative_to)
    raise err


def _dump(doc: Any) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _parallel(fn: Callable[[str], Any], files: Sequence[str]) -> list:
    # results come back in sorted file order whatever the completion order
    ordered = sorted(files)
    if len(ordered) <= 1:
        return [fn(f) for f in ordered]
    with ThreadPoolExecutor(max_workers=min(8, len(ordered))) as pool:
        return list(pool.map(fn, ordered))


def _load_records(path: str) -> list[MetadataRecord]:
    doc = _read_json(path)
    if not isinstance(doc, list):
        err = InputError("metadata document must be a JSON array")
        err.file = path
        raise err
    return _located(path, lambda: [MetadataRecord.from_dict(d) for d in doc])


# subcommands

def cmd_chunk(args) -> int:
    config = ChunkConfig(args.min_tokens, args.max_tokens)

    def one(path: str) -> dict:
        src = _read_bytes(path)
        chunks = _located(path, lambda: chunk_text(src, args.dialect, config))
        return chunks_to_dict(path, args.dialect, chunks)

    docs = _parallel(one, args.files)
    _emit(_dump(docs[0] if len(docs) == 1 else docs), args.out)
    return 0


def cmd_chunk_eval(args) -> int:
    files = {}
    for doc in _as_list(_read_json(args.pred)):
        name, dialect, _ = _located(args.pred, lambda: chunks_from_dict(doc))
        source = _read_bytes(_resolve_source(name, args.pred))
        _, dialect, chunks = _located(args.pred, lambda: chunks_from_dict(doc, source))
        files[name] = (dialect, chunks)
    gold = {}
    for doc in _as_list(_read_json(args.gold)):
        g = _located(args.gold, lambda: GoldSegmentation.from_dict(doc))
        gold[g.file] = g
    report = evaluate(files, gold, args.tolerance)
    _emit(_dump({"metric": "chunk-eval", "tolerance": args.tolerance, **report.to_dict(6)}), args.out)
    return 0


def cmd_extract(args) -> int:
    def one(path: str) -> list[MetadataRecord]:
        src = _read_bytes(path)
        return _located(path, lambda: extract(src, args.dialect, path))

    records = [r for batch in _parallel(one, args.files) for r in batch]
    records = resolve_externals(records)
    records.sort(key=lambda r: (r.file or "", r.span[0]))
    _emit(_dump([r.to_dict() for r in records]), args.out)
    return 0


def cmd_graph_build(args) -> int:
    graph = to_graph(_load_records(args.metadata))
    if args.infer_interfaces:
        graph = infer_interfaces(graph)
    for w in graph.warnings:
        print(f"{PROG}: warning: {w}", file=sys.stderr)
    _emit(_dump(graph_to_dict(graph)), args.out)
    return 0


def cmd_graph_compare(args) -> int:
    a = _located(args.source, lambda: parse_graph(_read_bytes(args.source)))
    b = _located(args.target, lambda: parse_graph(_read_bytes(args.target)))
    weights = LossWeights(args.gamma, args.lambda_)
    strict = not args.relaxed_kinds
    if args.mapping and args.oracle:
        raise UsageError("--mapping and --oracle are mutually exclusive")
    if args.mapping:
        mapping = _located(args.mapping, lambda: parse_mapping(_read_bytes(args.mapping).decode("utf-8")))
    elif args.oracle:
        mapping, _ = exhaustive_best_mapping(a, b, MatchConfig(), weights, strict)
    else:
        mapping = "auto"
    report = compare(a, b, mapping, weights, strict)
    _emit(_dump(report.to_dict()), args.out)
    return 0


def cmd_score(args) -> int:
    judgments = _located(args.judgments, lambda: parse_judgments(_read_bytes(args.judgments)))
    metric = Metric.parse(args.metric)
    value = score(judgments, metric)
    count = sum(1 for j in judgments if j.metric is metric)
    _emit(_dump({"metric": metric.value, "score": round(value, 6), "count": count}), args.out)
    return 0


def _string_set(path: str) -> set[str]:
    doc = _read_json(path)
    if not isinstance(doc, list) or not all(isinstance(x, str) for x in doc):
        err = InputError("expected a JSON array of strings")
        err.file = path
        raise err
    return set(doc)


def cmd_entity_recall(args) -> int:
    value = entity_recall(_string_set(args.reference), _string_set(args.candidate))
    _emit(_dump({"metric": "EntityRecall", "score": round(value, 6)}), args.out)
    return 0


def _metadata_ref(records: list[MetadataRecord], file: str, start: int, end: int) -> str | None:
    named = [r for r in records if r.file == file and r.object_type is not ObjectType.SCRIPT]
    for r in named:
        if start <= r.span[0] < end:
            return r.object_name
    for r in named:
        if r.span[0] <= start < r.span[1]:
            return r.object_name
    return None


def cmd_index_build(args) -> int:
    records = _load_records(args.metadata) if args.metadata else []
    docs = []
    for doc in _as_list(_read_json(args.chunks)):
        name, _, _ = _located(args.chunks, lambda: chunks_from_dict(doc))
        source = _read_bytes(_resolve_source(name, args.chunks))
        _, _, chunks = _located(args.chunks, lambda: chunks_from_dict(doc, source))
        for c in chunks:
            docs.append((f"{name}#{c.id}", c.content.decode("utf-8", errors="replace"),
                         _metadata_ref(records, name, c.start, c.end)))
    index = Index.build(docs, args.dim)
    _emit(index.to_json() + "\n", args.out)
    return 0


def cmd_query(args) -> int:
    index = _located(args.index, lambda: Index.from_dict(_read_json(args.index)))
    graph = _located(args.graph, lambda: parse_graph(_read_bytes(args.graph))) if args.graph else None
    seeds = [s.strip() for s in args.seeds.split(",") if s.strip()] if args.seeds else []
    if seeds and graph is None:
        raise UsageError("--seeds needs --graph")
    records = _load_records(args.metadata) if args.metadata else []
    text = args.text
    if text == "-" or (text is None and not seeds and not args.filter):
        text = sys.stdin.read()
    cfg = RetrievalConfig(dimension=index.dimension, top_k=args.k, graph_depth=args.depth)
    ranked = retrieve(text, seeds, args.filter, index, graph, records, cfg)
    _emit(_dump({"results": ranked.to_list()}), args.out)
    return 0


def cmd_report(args) -> int:
    merged: dict[str, Any] = {}
    if not args.no_timestamp:
        merged["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    merged["reports"] = {str(p): _read_json(p) for p in sorted(args.files)}
    _emit(_dump(merged), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog=PROG, description="Transformation-loss and chunking metrics for SQL code bases.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def out(sp):
        sp.add_argument("--out", metavar="F", help="write the report here instead of stdout")

    sp = sub.add_parser("chunk", help="split SQL files into chunks")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--dialect", type=_dialect, required=True)
    sp.add_argument("--min-tokens", type=_positive, default=64)
    sp.add_argument("--max-tokens", type=_positive, default=1024)
    out(sp)
    sp.set_defaults(func=cmd_chunk)

    sp = sub.add_parser("chunk-eval", help="score chunks against gold boundaries")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--gold", required=True)
    sp.add_argument("--tolerance", type=_non_negative, default=0)
    out(sp)
    sp.set_defaults(func=cmd_chunk_eval)

    sp = sub.add_parser("extract", help="extract per-object metadata")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--dialect", type=_dialect, required=True)
    out(sp)
    sp.set_defaults(func=cmd_extract)

    gp = sub.add_parser("graph", help="build or compare dependency graphs")
    gsub = gp.add_subparsers(dest="graph_command", required=True, metavar="ACTION")
    sp = gsub.add_parser("build")
    sp.add_argument("--metadata", required=True)
    sp.add_argument("--infer-interfaces", action="store_true")
    out(sp)
    sp.set_defaults(func=cmd_graph_build)
    sp = gsub.add_parser("compare")
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--mapping")
    sp.add_argument("--gamma", type=_unit, default=0.5)
    sp.add_argument("--lambda", dest="lambda_", type=_unit, default=0.5)
    sp.add_argument("--relaxed-kinds", action="store_true", help="ignore edge kinds when matching edges")
    sp.add_argument("--oracle", action="store_true", help="use the exhaustive best mapping (small graphs)")
    out(sp)
    sp.set_defaults(func=cmd_graph_compare)

    sp = sub.add_parser("score", help="ratio metric over judgment records")
    sp.add_argument("--judgments", required=True)
    sp.add_argument("--metric", required=True, type=str.lower,
                    choices=[m.value.lower() for m in Metric])
    out(sp)
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("entity-recall")
    sp.add_argument("--reference", required=True)
    sp.add_argument("--candidate", required=True)
    out(sp)
    sp.set_defaults(func=cmd_entity_recall)

    ip = sub.add_parser("index", help="build a retrieval index")
    isub = ip.add_subparsers(dest="index_command", required=True, metavar="ACTION")
    sp = isub.add_parser("build")
    sp.add_argument("--chunks", required=True)
    sp.add_argument("--metadata")
    sp.add_argument("--dim", type=_positive, default=256)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_index_build)

    sp = sub.add_parser("query", help="hybrid retrieval over an index")
    sp.add_argument("--index", required=True)
    sp.add_argument("--graph")
    sp.add_argument("--seeds")
    sp.add_argument("--depth", type=_non_negative, default=2)
    sp.add_argument("--filter")
    sp.add_argument("--metadata", help="metadata records that --filter is evaluated on")
    sp.add_argument("--text", help="query text; '-' or omitted reads standard input")
    sp.add_argument("--k", type=_positive, default=10)
    out(sp)
    sp.set_defaults(func=cmd_query)

    sp = sub.add_parser("report", help="merge metric JSON files into one summary")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--no-timestamp", action="store_true")
    out(sp)
    sp.set_defaults(func=cmd_report)
    return p


def _diagnostic(exc: TranslossError) -> str:
    parts = [PROG, "error"]
    file = getattr(exc, "file", None)
    if file:
        parts.append(file)
    msg = str(exc)
    offset = getattr(exc, "offset", None)
    if offset is not None and f"byte {offset}" not in msg:
        msg += f" (byte {offset})"
    parts.append(msg)
    return ": ".join(parts)


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except InputError as exc:
        print(_diagnostic(exc), file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(_diagnostic(exc), file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
