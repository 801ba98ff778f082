import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import corpus_files
from oracles import greedy_boundary_matches
from transloss.chunk_metrics import (
    GoldSegmentation, actl, boundary_f1, boundary_matches, chunk_boundaries, chunk_certainty,
    count_f1, count_rate_f1, evaluate, syntax_error_rate,
)
from transloss.chunker import Chunk, ChunkConfig, chunk_text
from transloss.errors import FileSetMismatch, InputError, UnsortedBoundaries


def chunk(content: bytes, tokens=0) -> Chunk:
    return Chunk(0, 0, len(content), (), tokens, False, content)


FOUR = [chunk(b"SELECT 1;"), chunk(b"SELECT 'a';"), chunk(b"UPDATE t SET x = 2;"), chunk(b"SELECT 'trunc")]


def test_certainty_and_error_rate_with_one_corrupted_chunk():
    assert chunk_certainty(FOUR, "generic") == 75.0
    assert syntax_error_rate(FOUR, "generic") == 25.0


def test_empty_chunk_list_conventions():
    assert chunk_certainty([], "generic") == 100.0
    assert syntax_error_rate([], "generic") == 0.0
    assert actl([]) == 0.0


def test_clean_corpus_run_is_fully_parseable():
    for path, dialect in corpus_files():
        chunks = chunk_text(path.read_bytes(), dialect, ChunkConfig(1, 16))
        assert chunk_certainty(chunks, dialect) == 100.0
        assert syntax_error_rate(chunks, dialect) == 0.0


def test_actl():
    assert actl([chunk(b"", 10), chunk(b"", 20), chunk(b"", 30)]) == 20.0
    assert actl([chunk(b"", 7)]) == 7.0


def test_count_f1_examples():
    assert count_f1(4, 2) == 2 / 3
    assert count_rate_f1({"a": 3, "b": 5}, {"a": 3, "b": 5}) == 1.0
    assert count_rate_f1({"a": 4, "b": 1}, {"a": 2, "b": 1}) == 5 / 6
    assert count_rate_f1({}, {}) == 1.0


def test_count_rate_rejects_different_file_sets():
    with pytest.raises(FileSetMismatch):
        count_rate_f1({"a": 1}, {"b": 1})


def test_boundary_examples():
    assert boundary_f1([120, 377], [120, 377]) == (1.0, 1.0, 1.0)
    assert boundary_f1([120, 400], [120, 377]) == (0.5, 0.5, 0.5)
    assert boundary_f1([118], [120], tolerance=5) == (1.0, 1.0, 1.0)
    assert boundary_f1([], []) == (1.0, 1.0, 1.0)
    assert boundary_f1([5], []) == (0.0, 0.0, 0.0)


def test_one_perturbed_boundary_of_three():
    assert boundary_f1([10, 20, 31], GoldSegmentation("f", (10, 20, 30))) == (2 / 3, 2 / 3, 2 / 3)


def test_unsorted_boundaries_rejected():
    with pytest.raises(UnsortedBoundaries):
        boundary_f1([20, 10], [10, 20])
    with pytest.raises(UnsortedBoundaries):
        GoldSegmentation("f", (5, 5))
    with pytest.raises(InputError):
        GoldSegmentation("f", (0, 4))


def test_gold_expected_count_and_json():
    g = GoldSegmentation.from_dict({"file": "x.sql", "boundaries": [3, 9]})
    assert g.expected_count == 3 and g.to_dict() == {"file": "x.sql", "boundaries": [3, 9]}


def test_self_evaluation_is_perfect():
    files, gold = {}, {}
    for path, dialect in corpus_files():
        chunks = chunk_text(path.read_bytes(), dialect, ChunkConfig(4, 40))
        files[str(path)] = (dialect, chunks)
        gold[str(path)] = GoldSegmentation(str(path), tuple(chunk_boundaries(chunks)))
    rep = evaluate(files, gold)
    assert rep.boundary_f1 == 1.0 and rep.count_rate_f1 == 1.0
    assert rep.chunk_certainty_pct == 100.0 and rep.syntax_error_rate_pct == 0.0


boundary_sets = st.lists(st.integers(1, 400), max_size=25, unique=True).map(sorted)


@settings(max_examples=300, deadline=None)
@given(boundary_sets, boundary_sets, st.integers(0, 20))
def test_greedy_matching_agrees_with_quadratic_reference(pred, gold, tol):
    assert boundary_matches(pred, gold, tol) == greedy_boundary_matches(pred, gold, tol)


@settings(max_examples=200, deadline=None)
@given(boundary_sets, boundary_sets, st.integers(0, 20))
def test_f1_is_exact_harmonic_mean(pred, gold, tol):
    p, r, f = boundary_f1(pred, gold, tol)
    assert 0.0 <= f <= 1.0
    assert f == (0.0 if p + r == 0 else 2 * p * r / (p + r))


@settings(max_examples=200, deadline=None)
@given(boundary_sets, boundary_sets, st.integers(0, 20), st.integers(0, 20))
def test_f1_non_decreasing_in_tolerance(pred, gold, t1, t2):
    lo, hi = sorted((t1, t2))
    assert boundary_f1(pred, gold, lo)[2] <= boundary_f1(pred, gold, hi)[2]


@given(boundary_sets)
def test_identical_boundaries_score_one(x):
    assert boundary_f1(x, x) == (1.0, 1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from([b"SELECT 1;", b"SELECT 'x", b"/* open", b"SELECT 2;"]), max_size=10))
def test_certainty_and_error_rate_sum_to_hundred(contents):
    chunks = [chunk(c) for c in contents]
    assert chunk_certainty(chunks, "generic") + syntax_error_rate(chunks, "generic") == 100.0
