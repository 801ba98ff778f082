"""Chunk quality metrics: parseability, size, and agreement with gold segmentations."""

from __future__ import annotations

import bisect
from fractions import Fraction
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .chunker import Chunk, split_statements
from .errors import FileSetMismatch, InputError, UnsortedBoundaries
from .lexer import Dialect


@dataclass(frozen=True)
class GoldSegmentation:
    """Reference chunking of one file: interior chunk-start offsets (offset 0 excluded)."""

    file: str
    boundaries: tuple[int, ...]
    length: int | None = None

    def __post_init__(self):
        _check_sorted(self.boundaries)
        if self.boundaries and self.boundaries[0] <= 0:
            raise InputError(f"{self.file}: gold boundaries must be > 0")
        if self.length is not None and self.boundaries and self.boundaries[-1] >= self.length:
            raise InputError(f"{self.file}: gold boundary {self.boundaries[-1]} is not inside the file")

    @property
    def expected_count(self) -> int:
        return len(self.boundaries) + 1

    @classmethod
    def from_dict(cls, doc: Mapping) -> GoldSegmentation:
        try:
            return cls(str(doc["file"]), tuple(int(b) for b in doc["boundaries"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed gold document: {exc}") from None

    def to_dict(self) -> dict:
        return {"file": self.file, "boundaries": list(self.boundaries)}


@dataclass(frozen=True)
class ChunkMetricsReport:
    chunk_certainty_pct: float
    syntax_error_rate_pct: float
    actl: float
    count_rate_f1: float
    boundary_precision: float
    boundary_recall: float
    boundary_f1: float

    def to_dict(self, digits: int = 6) -> dict:
        return {k: round(v, digits) for k, v in self.__dict__.items()}


def _check_sorted(boundaries: Sequence[int]) -> None:
    for a, b in zip(boundaries, boundaries[1:]):
        if b <= a:
            raise UnsortedBoundaries(f"boundaries must be strictly increasing; got {a} then {b}")


def _parses(chunk: Chunk, dialect: Dialect) -> bool:
    try:
        split_statements(chunk.content, dialect)
    except InputError:
        return False
    return True


def chunk_certainty(chunks: Sequence[Chunk], dialect: Dialect | str) -> float:
    """Percentage of chunks whose bytes split into statements on their own."""
    if not chunks:
        return 100.0
    dialect = Dialect.parse(dialect)
    ok = sum(1 for c in chunks if _parses(c, dialect))
    return 100.0 * ok / len(chunks)


def syntax_error_rate(chunks: Sequence[Chunk], dialect: Dialect | str) -> float:
    """Percentage of chunks that fail to lex or split on their own (the complement of certainty)."""
    return 100.0 - chunk_certainty(chunks, dialect)


def actl(chunks: Sequence[Chunk]) -> float:
    """Average chunk token length (comments are never counted)."""
    if not chunks:
        return 0.0
    return sum(c.token_count for c in chunks) / len(chunks)


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def _count_f1_exact(predicted: int, gold: int) -> Fraction:
    # with hits = min(p, g): P = hits/p, R = hits/g, so F1 = 2*hits/(p+g)
    if predicted == gold == 0:
        return Fraction(1)
    return Fraction(2 * min(predicted, gold), predicted + gold)


def count_f1(predicted: int, gold: int) -> float:
    if predicted < 0 or gold < 0:
        raise InputError("chunk counts must be non-negative")
    return float(_count_f1_exact(predicted, gold))


def count_rate_f1(pred_counts: Mapping[str, int], gold_counts: Mapping[str, int]) -> float:
    """Mean over files of the min-count F1 between predicted and expected chunk counts."""
    if set(pred_counts) != set(gold_counts):
        missing = sorted(set(pred_counts) ^ set(gold_counts))
        raise FileSetMismatch(f"predicted and gold file sets differ: {missing}")
    if not pred_counts:
        return 1.0
    for f in pred_counts:
        count_f1(pred_counts[f], gold_counts[f])
    total = sum(_count_f1_exact(pred_counts[f], gold_counts[f]) for f in pred_counts)
    return float(total / len(pred_counts))


def boundary_matches(pred: Sequence[int], gold: Sequence[int], tolerance: int = 0) -> int:
    """Greedy one-to-one matching in ascending order; each prediction takes the
    earliest unconsumed gold boundary within ``tolerance`` bytes."""
    _check_sorted(pred)
    _check_sorted(gold)
    if tolerance < 0:
        raise InputError("tolerance must be non-negative")
    matches = 0
    g = 0
    for p in pred:
        g = max(g, bisect.bisect_left(gold, p - tolerance, lo=g))
        if g < len(gold) and gold[g] <= p + tolerance:
            matches += 1
            g += 1
    return matches


def boundary_f1(pred: Sequence[int], gold: GoldSegmentation | Sequence[int],
                tolerance: int = 0) -> tuple[float, float, float]:
    gold_b = gold.boundaries if isinstance(gold, GoldSegmentation) else tuple(gold)
    m = boundary_matches(pred, gold_b, tolerance)
    if not pred and not gold_b:
        return 1.0, 1.0, 1.0
    p = m / len(pred) if pred else 0.0
    r = m / len(gold_b) if gold_b else 0.0
    return p, r, _f1(p, r)


def chunk_boundaries(chunks: Iterable[Chunk]) -> list[int]:
    return [c.start for c in chunks if c.start > 0]


def evaluate(files: Mapping[str, tuple[Dialect, Sequence[Chunk]]],
             gold: Mapping[str, GoldSegmentation], tolerance: int = 0) -> ChunkMetricsReport:
    """Corpus-level report.

    Parse metrics and ACTL pool all chunks; boundary precision and recall are
    micro-averaged over files (total matches over total boundaries).
    """
    if set(files) != set(gold):
        raise FileSetMismatch(f"predicted and gold file sets differ: {sorted(set(files) ^ set(gold))}")
    all_chunks: list[Chunk] = []
    ok = 0
    matches = n_pred = n_gold = 0
    for name in sorted(files):
        dialect, chunks = files[name]
        all_chunks.extend(chunks)
        ok += sum(1 for c in chunks if _parses(c, dialect))
        pred_b = chunk_boundaries(chunks)
        gold_b = gold[name].boundaries
        matches += boundary_matches(pred_b, gold_b, tolerance)
        n_pred += len(pred_b)
        n_gold += len(gold_b)

    certainty = 100.0 * ok / len(all_chunks) if all_chunks else 100.0
    if n_pred == n_gold == 0:
        bp = br = bf = 1.0
    else:
        bp = matches / n_pred if n_pred else 0.0
        br = matches / n_gold if n_gold else 0.0
        bf = _f1(bp, br)
    crf = count_rate_f1({f: len(files[f][1]) for f in files},
                        {f: gold[f].expected_count for f in gold})
    return ChunkMetricsReport(certainty, 100.0 - certainty, actl(all_chunks), crf, bp, br, bf)
