"""Statement splitting and chunk assembly for SQL sources.

Statement spans and chunks both partition the input exactly: leading
whitespace and comments belong to the statement that follows them, trailing
ones to the last statement, and concatenating chunk bytes gives back the
original file.

Splitting rules per dialect:

* generic, BigQuery, Snowflake, PL/pgSQL: ``;`` at block depth 0.
* T-SQL: a line holding only ``GO`` ends a batch; ``;`` splits inside a batch
  except within ``CREATE PROCEDURE/FUNCTION/TRIGGER``, which runs to the next
  ``GO``.
* PL/SQL: ``;`` at depth 0, except ``CREATE PROCEDURE/FUNCTION/PACKAGE/TRIGGER``,
  which runs to a line holding only ``/``.

Block depth counts ``BEGIN``/``CASE`` against their ``END``. Routine
definitions are marked atomic and are never divided by chunking.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import InputError, UnbalancedBlock
from .lexer import Dialect, Token, TokenKind, code_tokens, lex


class Terminator(enum.Enum):
    SEMICOLON = "Semicolon"
    GO_BATCH = "GoBatch"
    SLASH_BLOCK = "SlashBlock"
    DOLLAR_BODY = "DollarBody"
    EOF = "Eof"


@dataclass(frozen=True)
class StatementSpan:
    start: int
    end: int
    terminator: Terminator
    atomic: bool = False
    token_count: int = 0

    def shifted(self, delta: int) -> StatementSpan:
        return StatementSpan(self.start + delta, self.end + delta, self.terminator,
                             self.atomic, self.token_count)

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end,
                "terminator": self.terminator.value, "atomic": self.atomic}


@dataclass(frozen=True)
class ChunkConfig:
    min_tokens: int = 64
    max_tokens: int = 1024

    def __post_init__(self):
        if not 0 < self.min_tokens <= self.max_tokens:
            raise InputError(f"need 0 < min_tokens <= max_tokens, got "
                             f"{self.min_tokens} and {self.max_tokens}")


@dataclass(frozen=True)
class Chunk:
    id: int
    start: int
    end: int
    statements: tuple[StatementSpan, ...]
    token_count: int
    oversize: bool = False
    content: bytes = field(default=b"", repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "start": self.start,
            "end": self.end,
            "token_count": self.token_count,
            "oversize": self.oversize,
            "statements": [s.to_dict() for s in self.statements],
        }


def as_bytes(text: str | bytes) -> bytes:
    return text.encode("utf-8") if isinstance(text, str) else bytes(text)


_ROUTINE_KINDS = {"PROCEDURE", "PROC", "FUNCTION", "TRIGGER", "PACKAGE"}
_CREATE_MODIFIERS = {"OR", "REPLACE", "ALTER", "EDITIONABLE", "NONEDITIONABLE",
                     "TEMP", "TEMPORARY", "SECURE", "DEFINER"}
_TRANSACTION_WORDS = {"TRANSACTION", "TRAN", "WORK", "ISOLATION", "DISTRIBUTED",
                      "DEFERRED", "IMMEDIATE", "EXCLUSIVE", "READ"}
_END_SUFFIXES = {"IF", "LOOP", "WHILE", "FOR", "REPEAT"}


def routine_header(code: list[Token], i: int, dialect: Dialect = Dialect.GENERIC) -> tuple[str, int] | None:
    """If ``code[i:]`` opens a routine definition, return (kind, index past the kind word).

    Recognizes ``CREATE [OR REPLACE|OR ALTER|...] PROCEDURE|FUNCTION|TRIGGER|PACKAGE [BODY]``,
    ``CREATE TYPE BODY`` and, in T-SQL, ``ALTER PROCEDURE|FUNCTION|TRIGGER``.
    """
    if i >= len(code) or code[i].kind is not TokenKind.KEYWORD:
        return None
    first = code[i].upper
    if first != "CREATE" and not (first == "ALTER" and dialect is Dialect.TSQL):
        return None
    j = i + 1
    while j < len(code) and code[j].upper in _CREATE_MODIFIERS:
        j += 1
    if j >= len(code):
        return None
    word = code[j].upper
    if word == "TYPE" and j + 1 < len(code) and code[j + 1].upper == "BODY":
        return "TYPE BODY", j + 2
    if word in _ROUTINE_KINDS:
        if word == "PACKAGE" and j + 1 < len(code) and code[j + 1].upper == "BODY":
            return "PACKAGE BODY", j + 2
        return ("PROCEDURE" if word == "PROC" else word), j + 1
    return None


def _alone_on_line(src: bytes, tok: Token) -> bool:
    line_start = src.rfind(b"\n", 0, tok.start) + 1
    line_end = src.find(b"\n", tok.end)
    if line_end < 0:
        line_end = len(src)
    return not src[line_start:tok.start].strip() and not src[tok.end:line_end].strip()


def _is_delimiter_line(src: bytes, tok: Token, dialect: Dialect) -> bool:
    if dialect is Dialect.TSQL:
        return tok.kind is TokenKind.KEYWORD and tok.upper == "GO" and _alone_on_line(src, tok)
    if dialect is Dialect.PLSQL:
        return tok.is_punct("/") and _alone_on_line(src, tok)
    return False


class _Blocks:
    """Token-level BEGIN/CASE/END depth tracker."""

    def __init__(self, dialect: Dialect, depth: int = 0, opener: int = 0):
        self.dialect = dialect
        self.stack: list[int] = [opener] * depth
        self.declares: list[int] = []

    @property
    def depth(self) -> int:
        return len(self.stack)

    def feed(self, code: list[Token], j: int) -> None:
        tok = code[j]
        if tok.kind is not TokenKind.KEYWORD:
            return
        word = tok.upper
        nxt = code[j + 1] if j + 1 < len(code) else None
        nxt_word = nxt.upper if nxt is not None and nxt.kind is not TokenKind.STRING else None
        if word == "BEGIN":
            if nxt is None or nxt.is_punct(";") or nxt_word in _TRANSACTION_WORDS:
                return
            if self.declares and self.declares[-1] == self.depth:
                self.declares.pop()
                return
            self.stack.append(tok.start)
        elif word == "CASE":
            self.stack.append(tok.start)
        elif word == "DECLARE":
            if self.dialect in (Dialect.PLSQL, Dialect.SNOWFLAKE):
                self.stack.append(tok.start)
                self.declares.append(self.depth)
        elif word == "END":
            if self.dialect is not Dialect.TSQL:
                if nxt_word in _END_SUFFIXES:
                    return
                if not self.stack and (nxt is None or nxt.is_punct(";")
                                       or nxt_word in ("TRANSACTION", "WORK")):
                    return  # transaction END
            if not self.stack:
                raise UnbalancedBlock(tok.start, "END without matching BEGIN or CASE")
            self.stack.pop()
            while self.declares and self.declares[-1] > self.depth:
                self.declares.pop()

    def check_closed(self) -> None:
        if self.stack:
            raise UnbalancedBlock(self.stack[-1], "block opened here is never closed")


@dataclass
class _Core:
    start: int
    end: int
    terminator: Terminator
    atomic: bool
    tokens: int


def split_statements(text: str | bytes, dialect: Dialect | str = Dialect.GENERIC) -> list[StatementSpan]:
    """Split source text into statement spans that partition it."""
    dialect = Dialect.parse(dialect)
    src = as_bytes(text)
    code = code_tokens(lex(src, dialect))
    cores: list[_Core] = []
    i = 0
    n = len(code)
    while i < n:
        first = code[i]
        if _is_delimiter_line(src, first, dialect):
            term = Terminator.GO_BATCH if dialect is Dialect.TSQL else Terminator.SLASH_BLOCK
            if cores:
                prev = cores[-1]
                prev.end, prev.terminator, prev.tokens = first.end, term, prev.tokens + 1
            else:
                cores.append(_Core(first.start, first.end, term, False, 1))
            i += 1
            continue

        header = routine_header(code, i, dialect)
        extended = header is not None and (
            (dialect is Dialect.TSQL and header[0] in ("PROCEDURE", "FUNCTION", "TRIGGER"))
            or dialect is Dialect.PLSQL)
        opens = 1 if extended and header[0] in ("PACKAGE", "PACKAGE BODY", "TYPE BODY") else 0
        blocks = _Blocks(dialect, opens, first.start)
        j = i
        terminator = Terminator.EOF
        end_index = n - 1
        while j < n:
            tok = code[j]
            if j > i and _is_delimiter_line(src, tok, dialect):
                blocks.check_closed()
                terminator = Terminator.GO_BATCH if dialect is Dialect.TSQL else Terminator.SLASH_BLOCK
                end_index = j
                break
            blocks.feed(code, j)
            if not extended and tok.is_punct(";") and blocks.depth == 0:
                terminator = Terminator.SEMICOLON
                end_index = j
                break
            j += 1
        else:
            blocks.check_closed()

        atomic = header is not None
        if (atomic and terminator is Terminator.SEMICOLON
                and any(t.kind is TokenKind.STRING and t.text.startswith("$")
                        for t in code[i:end_index])):
            terminator = Terminator.DOLLAR_BODY
        cores.append(_Core(first.start, code[end_index].end, terminator, atomic, end_index - i + 1))
        i = end_index + 1

    if not cores:
        return [StatementSpan(0, len(src), Terminator.EOF)] if src else []
    spans = []
    prev_end = 0
    for k, core in enumerate(cores):
        end = len(src) if k == len(cores) - 1 else core.end
        spans.append(StatementSpan(prev_end, end, core.terminator, core.atomic, core.tokens))
        prev_end = end
    return spans


def assemble_chunks(spans: list[StatementSpan], config: ChunkConfig | None = None,
                    source: bytes = b"") -> list[Chunk]:
    """Greedily pack whole statements into chunks.

    A chunk closes once it holds ``min_tokens`` or when the next statement
    would push it past ``max_tokens``. A single statement larger than
    ``max_tokens`` becomes its own chunk flagged ``oversize``.
    """
    config = config or ChunkConfig()
    chunks: list[Chunk] = []
    current: list[StatementSpan] = []
    count = 0

    def flush(oversize: bool = False) -> None:
        nonlocal current, count
        start, end = current[0].start, current[-1].end
        chunks.append(Chunk(len(chunks), start, end, tuple(current), count, oversize,
                            source[start:end]))
        current, count = [], 0

    for span in spans:
        if span.token_count > config.max_tokens:
            if current:
                flush()
            current, count = [span], span.token_count
            flush(oversize=True)
            continue
        if current and (count >= config.min_tokens or count + span.token_count > config.max_tokens):
            flush()
        current.append(span)
        count += span.token_count
    if current:
        flush()
    return chunks


def chunk_text(text: str | bytes, dialect: Dialect | str = Dialect.GENERIC,
               config: ChunkConfig | None = None) -> list[Chunk]:
    src = as_bytes(text)
    return assemble_chunks(split_statements(src, dialect), config, src)


def chunks_to_dict(file: str, dialect: Dialect, chunks: list[Chunk]) -> dict:
    return {"file": file, "dialect": dialect.value, "chunks": [c.to_dict() for c in chunks]}


def chunks_from_dict(doc: dict, source: bytes | None = None) -> tuple[str, Dialect, list[Chunk]]:
    """Rebuild chunks from chunks-JSON; ``source`` fills in chunk bytes when given."""
    try:
        file = doc["file"]
        dialect = Dialect.parse(doc["dialect"])
        chunks = []
        for c in doc["chunks"]:
            stmts = tuple(StatementSpan(s["start"], s["end"], Terminator(s["terminator"]), bool(s["atomic"]))
                          for s in c["statements"])
            content = source[c["start"]:c["end"]] if source is not None else b""
            chunks.append(Chunk(int(c["id"]), int(c["start"]), int(c["end"]), stmts,
                                int(c["token_count"]), bool(c["oversize"]), content))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed chunks document: {exc}") from None
    return file, dialect, chunks
