"""Per-object metadata extraction from SQL token streams, and dependency graphs built from it.

Extraction is pattern-directed rather than grammar-based: each statement is
scanned for ``CREATE`` headers, table references after ``FROM``/``JOIN``,
write targets (``INSERT INTO``, ``UPDATE``, ``DELETE FROM``, ``MERGE INTO``,
``TRUNCATE``), routine calls (``EXEC``, ``CALL``, ``PERFORM``), control flow
keywords and error handlers. Dollar-quoted routine bodies are re-tokenized
and scanned as part of their routine.

Columns are attributed only when that needs no name resolution: qualified
references (``alias.column``), and bare select-list names in a query that
reads exactly one table.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Iterable

from .chunker import as_bytes, split_statements
from .errors import InputError
from .graph_mapping import normalize_name
from .graph_model import EdgeKind, GraphEdge, GraphNode, NodeKind, ProjectGraph
from .lexer import Dialect, Token, TokenKind, code_tokens, lex

logger = logging.getLogger(__name__)


class ObjectType(enum.Enum):
    PROCEDURE = "Procedure"
    FUNCTION = "Function"
    TABLE = "Table"
    VIEW = "View"
    SCRIPT = "Script"


_NODE_KIND = {
    ObjectType.PROCEDURE: NodeKind.PROCEDURE,
    ObjectType.FUNCTION: NodeKind.FUNCTION,
    ObjectType.TABLE: NodeKind.TABLE,
    ObjectType.VIEW: NodeKind.VIEW,
}


@dataclass
class MetadataRecord:
    object_type: ObjectType
    object_name: str
    signature: str = ""
    params_in: list[str] = field(default_factory=list)
    params_out: list[str] = field(default_factory=list)
    tables_read: set[str] = field(default_factory=set)
    tables_written: set[str] = field(default_factory=set)
    columns_referenced: set[str] = field(default_factory=set)
    called_routines: set[str] = field(default_factory=set)
    conditions_count: int = 0
    has_error_handling: bool = False
    external_dependencies: set[str] = field(default_factory=set)
    span: tuple[int, int] = (0, 0)
    dialect: Dialect = Dialect.GENERIC
    file: str | None = None

    @property
    def node_id(self) -> str:
        return normalize_name(self.object_name)

    def references(self) -> set[str]:
        return self.tables_read | self.tables_written | self.called_routines

    def to_dict(self) -> dict:
        return {
            "file": self.file,
            "object_type": self.object_type.value,
            "object_name": self.object_name,
            "signature": self.signature,
            "params_in": list(self.params_in),
            "params_out": list(self.params_out),
            "tables_read": sorted(self.tables_read),
            "tables_written": sorted(self.tables_written),
            "columns_referenced": sorted(self.columns_referenced),
            "called_routines": sorted(self.called_routines),
            "conditions_count": self.conditions_count,
            "has_error_handling": self.has_error_handling,
            "external_dependencies": sorted(self.external_dependencies),
            "span": {"start": self.span[0], "end": self.span[1]},
            "dialect": self.dialect.value,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> MetadataRecord:
        try:
            return cls(
                object_type=ObjectType(doc["object_type"]),
                object_name=doc["object_name"],
                signature=doc.get("signature", ""),
                params_in=list(doc.get("params_in", [])),
                params_out=list(doc.get("params_out", [])),
                tables_read=set(doc.get("tables_read", [])),
                tables_written=set(doc.get("tables_written", [])),
                columns_referenced=set(doc.get("columns_referenced", [])),
                called_routines=set(doc.get("called_routines", [])),
                conditions_count=int(doc.get("conditions_count", 0)),
                has_error_handling=bool(doc.get("has_error_handling", False)),
                external_dependencies=set(doc.get("external_dependencies", [])),
                span=(int(doc["span"]["start"]), int(doc["span"]["end"])),
                dialect=Dialect.parse(doc.get("dialect", "generic")),
                file=doc.get("file"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed metadata record: {exc}") from None


def _sort_key(r: MetadataRecord) -> tuple[str, int]:
    return (r.file or "", r.span[0])


_DEFINED = {"TABLE": ObjectType.TABLE, "VIEW": ObjectType.VIEW,
            "PROCEDURE": ObjectType.PROCEDURE, "PROC": ObjectType.PROCEDURE,
            "FUNCTION": ObjectType.FUNCTION}
_MODIFIERS = {"OR", "REPLACE", "ALTER", "TEMP", "TEMPORARY", "EDITIONABLE", "NONEDITIONABLE",
              "MATERIALIZED", "SECURE", "RECURSIVE", "GLOBAL", "LOCAL", "TRANSIENT", "VOLATILE"}
_DIRECTIONS = {"IN", "OUT", "INOUT", "OUTPUT", "READONLY", "NOCOPY"}
_CONDITIONS = {"IF", "CASE", "WHILE", "LOOP"}
_DDL_OBJECTS = {"TABLE", "VIEW", "FUNCTION", "PROCEDURE", "INDEX", "SCHEMA", "SEQUENCE", "TRIGGER"}
_CONSTRAINT_WORDS = {"CONSTRAINT", "PRIMARY", "FOREIGN", "UNIQUE", "CHECK", "INDEX", "KEY"}
_PLSQL_STATEMENT_START = {"BEGIN", "THEN", "ELSE", "LOOP", "IS", "AS"}
_NOT_UPDATE = {"ON", "FOR", "OR", "BEFORE", "AFTER", "OF", "KEY", "INSTEAD"}


def _unquote(text: str) -> str:
    if len(text) >= 2 and text[0] in '"[`' and text[-1] == {'"': '"', "[": "]", "`": "`"}[text[0]]:
        return text[1:-1]
    return text


def _is_name_part(tok: Token) -> bool:
    return tok.kind is TokenKind.IDENTIFIER


def _read_qualified(code: list[Token], k: int) -> tuple[str, int] | None:
    """Read ``part(.part)*`` at ``k``; return (unquoted dotted name, index after it)."""
    if k >= len(code) or not _is_name_part(code[k]):
        return None
    parts = [_unquote(code[k].text)]
    k += 1
    while (k + 1 < len(code) and code[k].is_punct(".")
           and code[k + 1].kind in (TokenKind.IDENTIFIER, TokenKind.KEYWORD)):
        parts.append(_unquote(code[k + 1].text))
        k += 2
    return ".".join(parts), k


def _is_local(name: str) -> bool:
    # T-SQL variables and temp tables, positional parameters
    return name[:1] in ("@", "#", "$", ":")


def _matching_paren(code: list[Token], k: int) -> int:
    depth = 0
    for j in range(k, len(code)):
        if code[j].is_punct("("):
            depth += 1
        elif code[j].is_punct(")"):
            depth -= 1
            if depth == 0:
                return j
    return len(code) - 1


def _split_top_commas(tokens: list[Token]) -> list[list[Token]]:
    groups: list[list[Token]] = [[]]
    depth = 0
    for t in tokens:
        if t.is_punct("("):
            depth += 1
        elif t.is_punct(")"):
            depth -= 1
        if depth == 0 and t.is_punct(","):
            groups.append([])
        else:
            groups[-1].append(t)
    return [g for g in groups if g]


def _parse_param(group: list[Token]) -> tuple[str, bool, bool] | None:
    words = [t.upper for t in group if t.kind is TokenKind.KEYWORD]
    rest = [t for t in group if not (t.kind is TokenKind.KEYWORD and t.upper in _DIRECTIONS)]
    if len(rest) < 2 or rest[0].kind is not TokenKind.IDENTIFIER:
        return None  # unnamed parameter (type only)
    is_out = any(w in ("OUT", "INOUT", "OUTPUT") for w in words)
    # T-SQL OUTPUT parameters also carry a value in, like INOUT
    is_in = not is_out or "INOUT" in words or "OUTPUT" in words or ("IN" in words and "OUT" in words)
    return normalize_name(_unquote(rest[0].text)), is_in, is_out


class _Scanner:
    """Accumulates facts for one record from one or more token streams."""

    def __init__(self, record: MetadataRecord, dialect: Dialect, routine: bool):
        self.r = record
        self.dialect = dialect
        self.routine = routine
        self.ctes: set[str] = set()
        self.select_bare: set[str] = set()
        self.from_tables: set[str] = set()
        self.joined = False

    def _name(self, raw: str) -> str:
        return normalize_name(raw)

    def _table_list(self, code: list[Token], k: int, target: set[str], consumed: set[int],
                    single: bool = False) -> int:
        while True:
            got = _read_qualified(code, k)
            if got is None:
                return k
            raw, nxt = got
            consumed.update(range(k, nxt))
            if nxt < len(code) and code[nxt].is_punct("(") and target is self.r.tables_read:
                # table-valued function in a FROM/JOIN position
                if not _is_local(raw):
                    self.r.called_routines.add(self._name(raw))
                k = _matching_paren(code, nxt) + 1
            else:
                if not _is_local(raw):
                    target.add(self._name(raw))
                    if target is self.r.tables_read:
                        self.from_tables.add(self._name(raw))
                k = nxt
            if k < len(code) and code[k].is_keyword("AS"):
                k += 1
            if k < len(code) and code[k].kind is TokenKind.IDENTIFIER:
                consumed.add(k)
                k += 1
            if k + 1 < len(code) and code[k].is_keyword("WITH") and code[k + 1].is_punct("("):
                k = _matching_paren(code, k + 1) + 1
            if single or k >= len(code) or not code[k].is_punct(","):
                return k
            k += 1

    def scan(self, code: list[Token]) -> None:
        r = self.r
        consumed: set[int] = set()
        subquery: list[bool] = []
        select_depth: list[int] = []
        n = len(code)
        for k, tok in enumerate(code):
            prev = code[k - 1] if k else None
            nxt = code[k + 1] if k + 1 < n else None
            if tok.is_punct("("):
                subquery.append(nxt is not None and nxt.is_keyword("SELECT", "WITH"))
                continue
            if tok.is_punct(")"):
                if subquery:
                    subquery.pop()
                continue
            query_level = not subquery or subquery[-1]

            if tok.kind is TokenKind.KEYWORD:
                word = tok.upper
                if word == "SELECT":
                    select_depth.append(len(subquery))
                elif word == "INTO" and select_depth and select_depth[-1] == len(subquery):
                    select_depth.pop()  # SELECT ... INTO variables
                elif word == "FROM" and query_level:
                    if select_depth and select_depth[-1] == len(subquery):
                        select_depth.pop()
                    if prev is not None and prev.is_keyword("DELETE"):
                        self._table_list(code, k + 1, r.tables_written, consumed, single=True)
                    else:
                        self._table_list(code, k + 1, r.tables_read, consumed)
                elif word == "JOIN":
                    self.joined = True
                    self._table_list(code, k + 1, r.tables_read, consumed, single=True)
                elif word == "USING" and nxt is not None and nxt.kind is TokenKind.IDENTIFIER:
                    self._table_list(code, k + 1, r.tables_read, consumed, single=True)
                elif word == "INSERT":
                    j = k + 1
                    while j < n and code[j].upper in ("INTO", "OVERWRITE"):
                        j += 1
                    self._table_list(code, j, r.tables_written, consumed, single=True)
                elif word == "UPDATE" and not (prev is not None and prev.upper in _NOT_UPDATE):
                    self._table_list(code, k + 1, r.tables_written, consumed, single=True)
                elif word == "DELETE" and nxt is not None and nxt.kind is TokenKind.IDENTIFIER:
                    self._table_list(code, k + 1, r.tables_written, consumed, single=True)
                elif word == "MERGE":
                    j = k + 2 if nxt is not None and nxt.is_keyword("INTO") else k + 1
                    self._table_list(code, j, r.tables_written, consumed, single=True)
                elif word == "TRUNCATE":
                    j = k + 2 if nxt is not None and nxt.is_keyword("TABLE") else k + 1
                    self._table_list(code, j, r.tables_written, consumed, single=True)
                elif word in ("EXEC", "EXECUTE", "CALL", "PERFORM"):
                    self._call(code, k, consumed)
                elif word in _CONDITIONS and self.routine:
                    after_end = prev is not None and prev.is_keyword("END")
                    ddl_guard = word == "IF" and prev is not None and prev.upper in _DDL_OBJECTS
                    if not after_end and not ddl_guard:
                        r.conditions_count += 1
                elif word == "EXCEPTION" and not (prev is not None and prev.is_keyword("RAISE")):
                    r.has_error_handling = True
                elif word == "CATCH" or (word == "TRY" and prev is not None and prev.is_keyword("BEGIN")):
                    r.has_error_handling = True
                continue

            if tok.kind is not TokenKind.IDENTIFIER or k in consumed:
                continue
            # CTE names: WITH name AS (SELECT ...
            if (prev is not None and (prev.is_keyword("WITH") or prev.is_punct(",") or prev.upper == "RECURSIVE")
                    and k + 3 < n and code[k + 1].is_keyword("AS") and code[k + 2].is_punct("(")
                    and code[k + 3].is_keyword("SELECT", "WITH", "VALUES")):
                self.ctes.add(self._name(tok.text))
                continue
            if prev is not None and prev.is_punct("."):
                continue
            got = _read_qualified(code, k)
            raw, after = got
            if (self.dialect is Dialect.PLSQL and self.routine and not _is_local(raw)
                    and (prev is None or prev.is_punct(";") or prev.upper in _PLSQL_STATEMENT_START)
                    and after < n and (code[after].is_punct("(") or code[after].is_punct(";"))):
                # PL/SQL invokes procedures as bare statements: pkg.proc(args);
                consumed.update(range(k, after))
                r.called_routines.add(self._name(raw))
                continue
            if after - k >= 3:
                consumed.update(range(k, after))
                if not (after < n and code[after].is_punct("(")):
                    column = raw.rsplit(".", 1)[1]
                    if not _is_local(raw):
                        r.columns_referenced.add(self._name(column))
            elif (select_depth and select_depth[-1] == len(subquery) and not _is_local(raw)
                  and not (nxt is not None and (nxt.is_punct("(") or nxt.is_punct(".")))
                  and not (prev is not None and (prev.is_keyword("AS") or prev.kind in (
                      TokenKind.IDENTIFIER, TokenKind.NUMBER, TokenKind.STRING) or prev.is_punct(")")))):
                self.select_bare.add(self._name(raw))

    def _call(self, code: list[Token], k: int, consumed: set[int]) -> None:
        word = code[k].upper
        if word == "EXECUTE" and self.dialect is Dialect.PLPGSQL:
            return  # dynamic SQL
        j = k + 1
        if j < len(code) and code[j].is_keyword("IMMEDIATE"):
            return
        # EXEC @rc = proc
        if (j + 2 < len(code) and code[j].text.startswith("@") and code[j + 1].is_punct("=")):
            j += 2
        got = _read_qualified(code, j)
        if got is None:
            return
        raw, after = got
        consumed.update(range(j, after))
        if not _is_local(raw):
            self.r.called_routines.add(self._name(raw))

    def finish(self) -> None:
        r = self.r
        for names in (r.tables_read, r.tables_written):
            names -= self.ctes
        if len(self.from_tables - self.ctes) == 1 and not self.joined:
            r.columns_referenced |= self.select_bare


def _header(code: list[Token], dialect: Dialect) -> tuple[ObjectType, int] | None:
    if not code:
        return None
    first = code[0].upper
    if code[0].kind is not TokenKind.KEYWORD or not (
            first == "CREATE" or (first == "ALTER" and dialect is Dialect.TSQL)):
        return None
    j = 1
    while j < len(code) and code[j].upper in _MODIFIERS:
        j += 1
    if j >= len(code) or code[j].upper not in _DEFINED:
        return None
    kind = _DEFINED[code[j].upper]
    if first == "ALTER" and kind not in (ObjectType.PROCEDURE, ObjectType.FUNCTION):
        return None
    j += 1
    # IF NOT EXISTS
    if j + 2 < len(code) and code[j].is_keyword("IF") and code[j + 1].is_keyword("NOT"):
        j += 3
    return kind, j


def _dollar_body(tok: Token) -> str | None:
    text = tok.text
    if tok.kind is not TokenKind.STRING or not text.startswith("$"):
        return None
    tag_end = text.index("$", 1) + 1
    return text[tag_end:len(text) - tag_end]


def _statement_record(src: bytes, code: list[Token], dialect: Dialect, span: tuple[int, int],
                      file: str | None) -> MetadataRecord:
    header = _header(code, dialect)
    if header is None:
        record = MetadataRecord(ObjectType.SCRIPT, "", span=span, dialect=dialect, file=file)
        scanner = _Scanner(record, dialect, routine=False)
        scanner.scan(code)
        scanner.finish()
        return record

    kind, j = header
    got = _read_qualified(code, j)
    if got is None:
        record = MetadataRecord(ObjectType.SCRIPT, "", span=span, dialect=dialect, file=file)
        scanner = _Scanner(record, dialect, routine=False)
        scanner.scan(code)
        scanner.finish()
        return record
    raw_name, after = got
    record = MetadataRecord(kind, raw_name, span=span, dialect=dialect, file=file)
    sig_end = code[after - 1].end
    body_start = after
    routine = kind in (ObjectType.PROCEDURE, ObjectType.FUNCTION)

    if after < len(code) and code[after].is_punct("("):
        close = _matching_paren(code, after)
        groups = _split_top_commas(code[after + 1:close])
        sig_end = code[close].end
        body_start = close + 1
        if kind is ObjectType.TABLE:
            for g in groups:
                if g[0].kind is TokenKind.IDENTIFIER and g[0].upper not in _CONSTRAINT_WORDS:
                    record.columns_referenced.add(normalize_name(_unquote(g[0].text)))
        elif routine:
            _collect_params(record, groups)
    elif routine and dialect is Dialect.TSQL:
        k = after
        while k < len(code) and not code[k].is_keyword("AS", "WITH", "RETURNS"):
            k += 1
        if k > after:
            _collect_params(record, _split_top_commas(code[after:k]))
            sig_end = code[k - 1].end
        body_start = k
    record.signature = src[code[0].start:sig_end].decode("utf-8", errors="replace")

    scanner = _Scanner(record, dialect, routine=routine)
    body = code[body_start:]
    scanner.scan(body)
    for tok in body:
        inner = _dollar_body(tok)
        if inner is None:
            continue
        try:
            inner_code = code_tokens(lex(inner, dialect))
        except InputError:
            logger.debug("skipping unparseable routine body in %s", raw_name)
            continue
        scanner.scan(inner_code)
    scanner.finish()
    return record


def _collect_params(record: MetadataRecord, groups: list[list[Token]]) -> None:
    for g in groups:
        parsed = _parse_param(g)
        if parsed is None:
            continue
        name, is_in, is_out = parsed
        if is_in:
            record.params_in.append(name)
        if is_out:
            record.params_out.append(name)


def resolve_externals(records: Iterable[MetadataRecord]) -> list[MetadataRecord]:
    """Fill ``external_dependencies`` with referenced names defined nowhere in ``records``."""
    records = list(records)
    defined = {r.node_id for r in records if r.object_type is not ObjectType.SCRIPT}
    for r in records:
        r.external_dependencies = r.references() - defined
    return records


def extract(text: str | bytes, dialect: Dialect | str = Dialect.GENERIC,
            file: str | None = None) -> list[MetadataRecord]:
    """One record per defined object or stand-alone statement, in source order."""
    dialect = Dialect.parse(dialect)
    src = as_bytes(text)
    spans = split_statements(src, dialect)
    code = code_tokens(lex(src, dialect))
    records = []
    k = 0
    for span in spans:
        stmt = []
        while k < len(code) and code[k].start < span.end:
            stmt.append(code[k])
            k += 1
        if not stmt:
            continue
        records.append(_statement_record(src, stmt, dialect, (span.start, span.end), file))
    return resolve_externals(records)


def to_graph(records: Iterable[MetadataRecord]) -> ProjectGraph:
    """Dependency graph: a node per defined object, External nodes for undefined names,
    and READS / WRITES / CALLS edges from each definition."""
    ordered = sorted(records, key=_sort_key)
    nodes: dict[str, GraphNode] = {}
    owners: list[MetadataRecord] = []
    warnings: list[str] = []
    for r in ordered:
        if r.object_type is ObjectType.SCRIPT:
            continue
        nid = r.node_id
        if nid in nodes:
            warnings.append(f"duplicate definition of {nid!r} at {r.file or '<input>'}:{r.span[0]} ignored")
            continue
        nodes[nid] = GraphNode(nid, r.object_name, _NODE_KIND[r.object_type])
        owners.append(r)

    for r in ordered:
        for name in sorted(r.references()):
            if name not in nodes:
                nodes[name] = GraphNode(name, name, NodeKind.EXTERNAL)

    edges = []
    for r in owners:
        src = r.node_id
        edges += [GraphEdge(src, t, EdgeKind.READS) for t in sorted(r.tables_read)]
        edges += [GraphEdge(src, t, EdgeKind.WRITES) for t in sorted(r.tables_written)]
        edges += [GraphEdge(src, t, EdgeKind.CALLS) for t in sorted(r.called_routines)]
    return ProjectGraph.from_parts(nodes.values(), edges, warnings)
