import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import corpus_files
from transloss.chunker import (
    ChunkConfig, StatementSpan, Terminator, assemble_chunks, chunk_text, chunks_from_dict,
    chunks_to_dict, split_statements,
)
from transloss.errors import InputError, LexError, UnbalancedBlock, UnterminatedComment, UnterminatedString
from transloss.lexer import Dialect, TokenKind, lex

FILES = corpus_files()
CONFIGS = [ChunkConfig(), ChunkConfig(1, 1), ChunkConfig(5, 20), ChunkConfig(64, 1024)]


def kinds(tokens):
    return [(t.kind, t.text) for t in tokens]


# lexer

def test_lex_simple_select():
    assert kinds(lex(b"SELECT 1;")) == [
        (TokenKind.KEYWORD, "SELECT"), (TokenKind.NUMBER, "1"), (TokenKind.PUNCT, ";")]


def test_doubled_quote_escape_is_one_string():
    toks = lex(b"'it''s'")
    assert len(toks) == 1
    assert toks[0].kind is TokenKind.STRING and (toks[0].start, toks[0].end) == (0, 7)


def test_dollar_quote_hides_semicolon():
    toks = lex(b"$body$ x; $body$", Dialect.PLPGSQL)
    assert [t.kind for t in toks] == [TokenKind.STRING]
    assert not any(t.is_punct(";") for t in toks)


def test_tsql_brackets_and_nested_postgres_comments():
    toks = lex(b"SELECT [order id] FROM t", Dialect.TSQL)
    assert toks[1].kind is TokenKind.IDENTIFIER and toks[1].text == "[order id]"
    toks = lex(b"/* a /* b */ c */ SELECT 1", Dialect.PLPGSQL)
    assert toks[0].kind is TokenKind.COMMENT and toks[1].text == "SELECT"


def test_offsets_are_bytes_not_characters():
    src = "SELECT 'é' x".encode()
    toks = lex(src)
    assert src[toks[1].start:toks[1].end] == "'é'".encode()
    assert toks[2].start == len(src) - 1


@pytest.mark.parametrize("src, err, offset", [
    (b"SELECT 'abc", UnterminatedString, 7),
    (b"SELECT 1 /* x", UnterminatedComment, 9),
])
def test_lex_errors_are_located(src, err, offset):
    with pytest.raises(err) as info:
        lex(src)
    assert info.value.offset == offset


# statement splitting

def test_two_selects():
    spans = split_statements(b"SELECT 1; SELECT 2;")
    assert [s.terminator for s in spans] == [Terminator.SEMICOLON] * 2


def test_tsql_go_batch_is_one_atomic_span():
    spans = split_statements(b"CREATE PROCEDURE p AS BEGIN SELECT 1; END\nGO", Dialect.TSQL)
    assert len(spans) == 1
    assert spans[0].atomic and spans[0].terminator is Terminator.GO_BATCH


def test_plsql_slash_block_is_one_atomic_span():
    spans = split_statements(b"CREATE PROCEDURE p IS BEGIN NULL; END;\n/", Dialect.PLSQL)
    assert len(spans) == 1
    assert spans[0].atomic and spans[0].terminator is Terminator.SLASH_BLOCK


def test_unbalanced_blocks_report_offsets():
    with pytest.raises(UnbalancedBlock) as info:
        split_statements(b"SELECT CASE WHEN a THEN 1;")
    assert info.value.offset == 7
    with pytest.raises(UnbalancedBlock) as info:
        split_statements(b"SELECT 1 END x;")
    assert info.value.offset == 9


def test_bare_end_is_a_transaction_end():
    assert len(split_statements(b"BEGIN; SELECT 1; END;")) == 3


def test_trailing_trivia_attaches_to_last_span():
    src = b"SELECT 1;\n-- tail\n"
    spans = split_statements(src)
    assert spans[-1].end == len(src)


# assembly

def spans_of(sizes, atomic=False):
    out, pos = [], 0
    for n in sizes:
        out.append(StatementSpan(pos, pos + n, Terminator.SEMICOLON, atomic, n))
        pos += n
    return out


def test_single_small_statement():
    chunks = assemble_chunks(spans_of([10]))
    assert len(chunks) == 1 and not chunks[0].oversize


def test_three_600_token_statements_make_three_chunks():
    chunks = assemble_chunks(spans_of([600, 600, 600]))
    assert [c.token_count for c in chunks] == [600, 600, 600]


def test_oversize_atomic_statement():
    chunks = assemble_chunks(spans_of([2000], atomic=True))
    assert len(chunks) == 1 and chunks[0].oversize


def test_small_statements_are_packed_until_min_tokens():
    chunks = assemble_chunks(spans_of([3] * 10), ChunkConfig(6, 100))
    assert [c.token_count for c in chunks] == [6] * 5


def test_chunk_text_examples():
    assert chunk_text(b"") == []
    assert len(chunk_text(b"SELECT 1; SELECT 2;", "generic", ChunkConfig(1, 3))) == 2


def test_config_rejects_inverted_bounds():
    with pytest.raises(InputError):
        ChunkConfig(10, 5)


def test_chunks_json_round_trip():
    src = FILES[0][0].read_bytes()
    chunks = chunk_text(src, FILES[0][1], ChunkConfig(1, 8))
    doc = chunks_to_dict("f.sql", FILES[0][1], chunks)
    _, dialect, back = chunks_from_dict(doc, src)
    assert dialect is FILES[0][1]
    assert [c.to_dict() for c in back] == [c.to_dict() for c in chunks]
    assert [c.content for c in back] == [c.content for c in chunks]


# corpus invariants

def check_invariants(src, dialect, config):
    chunks = chunk_text(src, dialect, config)
    assert b"".join(c.content for c in chunks) == src
    assert [c.start for c in chunks[1:]] == [c.end for c in chunks[:-1]]
    tokens = lex(src, dialect)
    opaque = [(t.start, t.end) for t in tokens if t.kind in (TokenKind.STRING, TokenKind.COMMENT)]
    for c in chunks:
        for s in c.statements:
            assert not any(a < s.start < b for a, b in opaque)
        # each chunk re-splits into exactly its own statements
        again = split_statements(c.content, dialect)
        assert [(s.start + c.start, s.end + c.start) for s in again] == [(s.start, s.end) for s in c.statements]
    return chunks


@pytest.mark.parametrize("config", CONFIGS, ids=lambda c: f"{c.min_tokens}-{c.max_tokens}")
@pytest.mark.parametrize("path, dialect", FILES, ids=[f"{d.value}/{p.name}" for p, d in FILES])
def test_corpus_partition_and_self_parsing(path, dialect, config):
    check_invariants(path.read_bytes(), dialect, config)


def test_corpus_covers_every_dialect():
    assert {d for _, d in FILES} == set(Dialect)
    assert len(FILES) >= 30


# fuzzing

sql_alphabet = st.sampled_from(list("SELECT BEGIN END CASE GO / ; ' \" $ $$ -- /* */ [ ] ` \n é 1 x ( ) ,".split(" "))
                               + [" ", "\n", "\t"])
sql_like = st.lists(sql_alphabet, max_size=60).map("".join)


@settings(max_examples=300, deadline=None)
@given(st.one_of(st.text(max_size=80), sql_like), st.sampled_from(list(Dialect)))
def test_arbitrary_text_tokenizes_or_fails_with_location(text, dialect):
    src = text.encode("utf-8")
    try:
        tokens = lex(src, dialect)
    except LexError as exc:
        assert 0 <= exc.offset <= len(src)
        return
    assert all(0 <= t.start < t.end <= len(src) for t in tokens)
    assert all(a.end <= b.start for a, b in zip(tokens, tokens[1:]))
    try:
        chunks = chunk_text(src, dialect, ChunkConfig(1, 4))
    except InputError as exc:
        assert exc.offset is not None and 0 <= exc.offset <= len(src)
        return
    assert b"".join(c.content for c in chunks) == src


@settings(max_examples=150, deadline=None)
@given(st.lists(st.sampled_from([
    "SELECT 1;", "SELECT 'a;b';", "-- c;\n", "/* ; */", "UPDATE t SET x = 1;",
    "CREATE FUNCTION f() RETURNS int AS $$ BEGIN RETURN 1; END $$ LANGUAGE plpgsql;",
    "BEGIN SELECT CASE WHEN 1 = 1 THEN 2 END; END;", "\n",
]), max_size=12), st.integers(1, 10), st.integers(0, 20))
def test_generated_scripts_round_trip(parts, lo, extra):
    src = "\n".join(parts).encode()
    check_invariants(src, Dialect.PLPGSQL, ChunkConfig(lo, lo + extra))
