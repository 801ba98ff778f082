"""Dialect-aware SQL tokenizer working on UTF-8 bytes.

Every token records a byte span into the source; spans never overlap and
together cover all non-whitespace bytes. Quoted literals, quoted identifiers,
comments and dollar-quoted bodies are single tokens, so nothing inside them
can be mistaken for a statement terminator.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .errors import UnterminatedComment, UnterminatedDollarQuote, UnterminatedString


class Dialect(enum.Enum):
    GENERIC = "generic"
    TSQL = "tsql"
    PLSQL = "plsql"
    PLPGSQL = "plpgsql"
    SNOWFLAKE = "snowflake"
    BIGQUERY = "bigquery"

    @classmethod
    def parse(cls, value: object) -> Dialect:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "").replace("/", "")
        try:
            return _DIALECT_ALIASES[key]
        except KeyError:
            raise ValueError(f"unknown dialect {value!r}; expected one of "
                             f"{', '.join(d.value for d in cls)}") from None


_DIALECT_ALIASES = {
    "generic": Dialect.GENERIC, "genericsql": Dialect.GENERIC, "sql": Dialect.GENERIC,
    "tsql": Dialect.TSQL, "mssql": Dialect.TSQL, "sqlserver": Dialect.TSQL,
    "plsql": Dialect.PLSQL, "oracle": Dialect.PLSQL,
    "plpgsql": Dialect.PLPGSQL, "postgres": Dialect.PLPGSQL, "postgresql": Dialect.PLPGSQL,
    "snowflake": Dialect.SNOWFLAKE, "snowflakesql": Dialect.SNOWFLAKE,
    "bigquery": Dialect.BIGQUERY,
}


class TokenKind(enum.Enum):
    IDENTIFIER = "Identifier"
    KEYWORD = "Keyword"
    NUMBER = "Number"
    STRING = "String"
    OPERATOR = "Operator"
    PUNCT = "Punct"
    COMMENT = "Comment"


@dataclass(frozen=True, slots=True)
class Token:
    kind: TokenKind
    start: int
    end: int
    text: str

    @property
    def upper(self) -> str:
        return self.text.upper()

    def is_keyword(self, *words: str) -> bool:
        return self.kind is TokenKind.KEYWORD and self.text.upper() in words

    def is_punct(self, char: str) -> bool:
        return self.kind is TokenKind.PUNCT and self.text == char


_COMMON_KEYWORDS = frozenset("""
ALL ALTER AND ANY AS ASC BEGIN BETWEEN BY CALL CASE CHECK COMMIT CONSTRAINT CREATE CROSS
CURSOR DECLARE DEFAULT DELETE DESC DISTINCT DO DROP ELSE END EXCEPT EXCEPTION EXECUTE EXISTS
FETCH FOR FOREIGN FROM FULL FUNCTION GRANT GROUP HAVING IF IN INDEX INNER INOUT INSERT
INTERSECT INTO IS JOIN KEY LEFT LIKE LIMIT LOOP MERGE NOT NULL OF ON OR ORDER OUT OUTER
OVER PARTITION PRIMARY PROCEDURE RAISE REFERENCES REPLACE RETURN RETURNS REVOKE RIGHT
ROLLBACK SELECT SET TABLE TEMP TEMPORARY THEN TO TRANSACTION TRIGGER TRUNCATE UNION UNIQUE
UPDATE USING VALUES VIEW WHEN WHERE WHILE WITH WORK
""".split())

_DIALECT_KEYWORDS = {
    Dialect.GENERIC: frozenset(),
    Dialect.TSQL: frozenset("GO TRY CATCH PROC EXEC TRAN OUTPUT TOP NOCOUNT PRINT".split()),
    Dialect.PLSQL: frozenset("PACKAGE BODY ELSIF EXIT EDITIONABLE NONEDITIONABLE IMMEDIATE".split()),
    Dialect.PLPGSQL: frozenset("PERFORM LANGUAGE ELSIF DECLARE".split()),
    Dialect.SNOWFLAKE: frozenset("LANGUAGE ELSEIF IMMEDIATE QUALIFY REPEAT".split()),
    Dialect.BIGQUERY: frozenset("ELSEIF REPEAT STRUCT QUALIFY".split()),
}

KEYWORDS = {d: _COMMON_KEYWORDS | extra for d, extra in _DIALECT_KEYWORDS.items()}

MULTI_CHAR_OPERATORS = (b"<=", b">=", b"<>", b"!=", b":=", b"||", b"=>")

_WS = frozenset(b" \t\n\r\x0b\x0c")
_NUMBER = re.compile(rb"0[xX][0-9A-Fa-f]+|[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?")
_DOLLAR_TAG = re.compile(rb"\$(?:[A-Za-z_\x80-\xff][A-Za-z0-9_\x80-\xff]*)?\$")
_POSITIONAL = re.compile(rb"\$[0-9]+")


def _word_pattern(dialect: Dialect) -> re.Pattern:
    start = r"A-Za-z_\x80-\xff"
    cont = r"A-Za-z0-9_\x80-\xff"
    if dialect is Dialect.TSQL:
        start += "@#"
        cont += "@#$"
    elif dialect is Dialect.PLSQL:
        cont += "#$"
    elif dialect is Dialect.SNOWFLAKE:
        # a '$$' right after a word opens a body, so '$' continues a word only singly
        return re.compile(rf"[{start}](?:[{cont}]|\$(?!\$))*".encode())
    elif dialect is not Dialect.BIGQUERY:
        cont += "$"
    return re.compile(rf"[{start}][{cont}]*".encode())


_WORDS = {d: _word_pattern(d) for d in Dialect}


def _decode(raw: bytes) -> str:
    return raw.decode("utf-8", errors="replace")


def _scan_quoted(src: bytes, i: int, close: int, backslash: bool) -> int:
    """End offset of the quoted run opening at ``i``, or -1 if unterminated.

    A doubled closing byte is an escaped literal character.
    """
    n = len(src)
    j = i + 1
    while j < n:
        c = src[j]
        if backslash and c == 0x5C:
            j += 2
            continue
        if c == close:
            if j + 1 < n and src[j + 1] == close:
                j += 2
                continue
            return j + 1
        j += 1
    return -1


def _scan_block_comment(src: bytes, i: int, nested: bool) -> int:
    n = len(src)
    depth = 1
    j = i + 2
    while j < n - 1:
        pair = src[j:j + 2]
        if pair == b"*/":
            depth -= 1
            j += 2
            if depth == 0:
                return j
            continue
        if nested and pair == b"/*":
            depth += 1
            j += 2
            continue
        j += 1
    return -1


def lex(text: str | bytes, dialect: Dialect | str = Dialect.GENERIC, strict: bool = True) -> list[Token]:
    """Tokenize ``text`` under ``dialect`` rules.

    With ``strict=False`` an unterminated literal, comment or body runs to the
    end of input instead of raising; this is how free text is tokenized for
    embedding.
    """
    dialect = Dialect.parse(dialect)
    src = text.encode("utf-8") if isinstance(text, str) else bytes(text)
    words = _WORDS[dialect]
    keywords = KEYWORDS[dialect]
    backslash_strings = dialect in (Dialect.SNOWFLAKE, Dialect.BIGQUERY)
    n = len(src)
    out: list[Token] = []
    append = out.append
    i = 0

    def unterminated(error_cls, start: int) -> int:
        if strict:
            raise error_cls(start)
        return n

    while i < n:
        c = src[i]
        if c in _WS:
            i += 1
            continue
        nxt = src[i + 1] if i + 1 < n else -1

        if (c == 0x2D and nxt == 0x2D) or (c == 0x23 and dialect is Dialect.BIGQUERY):  # -- or #
            j = src.find(b"\n", i)
            j = n if j < 0 else j
            if j > i and src[j - 1] == 0x0D:
                j -= 1
            append(Token(TokenKind.COMMENT, i, j, _decode(src[i:j])))
            i = j
            continue

        if c == 0x2F and nxt == 0x2A:  # /*
            j = _scan_block_comment(src, i, nested=dialect is Dialect.PLPGSQL)
            if j < 0:
                j = unterminated(UnterminatedComment, i)
            append(Token(TokenKind.COMMENT, i, j, _decode(src[i:j])))
            i = j
            continue

        if c == 0x27:  # '
            j = _scan_quoted(src, i, 0x27, backslash_strings)
            if j < 0:
                j = unterminated(UnterminatedString, i)
            append(Token(TokenKind.STRING, i, j, _decode(src[i:j])))
            i = j
            continue

        if c == 0x22 or (c == 0x5B and dialect is Dialect.TSQL) or (c == 0x60 and dialect is Dialect.BIGQUERY):
            close = {0x22: 0x22, 0x5B: 0x5D, 0x60: 0x60}[c]
            j = _scan_quoted(src, i, close, backslash=False)
            if j < 0:
                j = unterminated(UnterminatedString, i)
            append(Token(TokenKind.IDENTIFIER, i, j, _decode(src[i:j])))
            i = j
            continue

        if c == 0x24:  # $
            j = -2
            if dialect is Dialect.PLPGSQL:
                m = _DOLLAR_TAG.match(src, i)
                if m:
                    tag = m.group()
                    close = src.find(tag, m.end())
                    j = close + len(tag) if close >= 0 else unterminated(UnterminatedDollarQuote, i)
            elif dialect is Dialect.SNOWFLAKE and nxt == 0x24:
                close = src.find(b"$$", i + 2)
                j = close + 2 if close >= 0 else unterminated(UnterminatedDollarQuote, i)
            if j != -2:
                append(Token(TokenKind.STRING, i, j, _decode(src[i:j])))
                i = j
                continue
            m = _POSITIONAL.match(src, i)
            if m:
                append(Token(TokenKind.IDENTIFIER, i, m.end(), _decode(m.group())))
                i = m.end()
                continue

        if 0x30 <= c <= 0x39:
            m = _NUMBER.match(src, i)
            append(Token(TokenKind.NUMBER, i, m.end(), _decode(m.group())))
            i = m.end()
            continue

        m = words.match(src, i)
        if m:
            j = m.end()
            word = _decode(m.group())
            # E'...' in PL/pgSQL carries backslash escapes
            if (dialect is Dialect.PLPGSQL and j - i == 1 and word in "eE"
                    and j < n and src[j] == 0x27):
                k = _scan_quoted(src, j, 0x27, backslash=True)
                if k < 0:
                    k = unterminated(UnterminatedString, i)
                append(Token(TokenKind.STRING, i, k, _decode(src[i:k])))
                i = k
                continue
            kind = TokenKind.KEYWORD if word.upper() in keywords else TokenKind.IDENTIFIER
            append(Token(kind, i, j, word))
            i = j
            continue

        two = src[i:i + 2]
        if two in MULTI_CHAR_OPERATORS:
            append(Token(TokenKind.OPERATOR, i, i + 2, two.decode("ascii")))
            i += 2
            continue

        # any other byte, including stray continuation bytes, is one punctuation token
        if c < 0x80:
            append(Token(TokenKind.PUNCT, i, i + 1, chr(c)))
            i += 1
        else:
            j = i + 1
            while j < n and 0x80 <= src[j] < 0xC0:
                j += 1
            append(Token(TokenKind.PUNCT, i, j, _decode(src[i:j])))
            i = j
    return out


def code_tokens(tokens: list[Token]) -> list[Token]:
    return [t for t in tokens if t.kind is not TokenKind.COMMENT]
