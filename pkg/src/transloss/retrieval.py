"""Hybrid retrieval over chunks: hashed-token vectors, dependency-graph expansion,
metadata predicates and reciprocal rank fusion.

All scoring is deterministic. Embeddings count FNV-1a hashed tokens into a
fixed number of signed buckets, and cosine sums use ``math.fsum`` so results
do not depend on summation order or platform.
"""

from __future__ import annotations

import fnmatch
import json
import math
import re
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import BadGlob, BadPredicate, EmptyIndex, InputError, UnknownSeed
from .graph_mapping import normalize_name
from .graph_model import ProjectGraph
from .lexer import Dialect, TokenKind, lex
from .metadata_extract import MetadataRecord, ObjectType

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK64
    return h


def embed(text: str | bytes, dimension: int = 256) -> np.ndarray:
    """Signed feature-hashing embedding of the lowercased non-comment tokens of ``text``.

    Returns the zero vector when there are no tokens, otherwise a unit vector.
    """
    if dimension <= 0:
        raise InputError(f"dimension must be positive, got {dimension}")
    src = text.encode("utf-8") if isinstance(text, str) else bytes(text)
    counts = [0] * dimension
    for tok in lex(src, Dialect.GENERIC, strict=False):
        if tok.kind is TokenKind.COMMENT:
            continue
        h = fnv1a_64(src[tok.start:tok.end].lower())
        counts[h % dimension] += -1 if h >> 63 else 1
    norm = math.sqrt(sum(c * c for c in counts))
    vec = np.array(counts, dtype=np.float64)
    return vec / norm if norm else vec


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = math.sqrt(math.fsum(a * a))
    nb = math.sqrt(math.fsum(b * b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return math.fsum(a * b) / (na * nb)


@dataclass(frozen=True)
class RetrievalConfig:
    dimension: int = 256
    top_k: int = 10
    graph_depth: int = 2
    rrf_k0: int = 60

    def __post_init__(self):
        for name in ("dimension", "top_k", "graph_depth", "rrf_k0"):
            value = getattr(self, name)
            floor = 0 if name == "graph_depth" else 1
            if not isinstance(value, int) or isinstance(value, bool) or value < floor:
                raise InputError(f"{name} must be an integer >= {floor}, got {value!r}")


class RankedList(Sequence):
    """(doc_id, score) pairs by descending score, ties by ascending doc_id."""

    def __init__(self, scored: Mapping[str, float] | Iterable[tuple[str, float]] = ()):
        items = dict(scored)
        self._items = tuple(sorted(((d, float(s)) for d, s in items.items()),
                                   key=lambda p: (-p[1], p[0])))

    def __getitem__(self, i):
        return self._items[i]

    def __len__(self) -> int:
        return len(self._items)

    def __eq__(self, other):
        if isinstance(other, RankedList):
            return self._items == other._items
        return NotImplemented

    def __repr__(self):
        return f"RankedList({list(self._items)!r})"

    @property
    def doc_ids(self) -> list[str]:
        return [d for d, _ in self._items]

    def top(self, k: int) -> RankedList:
        out = RankedList()
        out._items = self._items[:k]
        return out

    def restrict(self, allowed: set[str]) -> RankedList:
        out = RankedList()
        out._items = tuple(p for p in self._items if p[0] in allowed)
        return out

    def to_list(self, digits: int = 9) -> list[dict]:
        return [{"doc": d, "score": float(f"{s:.{digits}g}")} for d, s in self._items]


@dataclass(frozen=True)
class IndexEntry:
    doc_id: str
    embedding: np.ndarray
    text: str = ""
    metadata_ref: str | None = None


class Index:
    """Immutable in-memory vector index, entries ordered by doc_id."""

    def __init__(self, entries: Iterable[IndexEntry], dimension: int = 256):
        entries = sorted(entries, key=lambda e: e.doc_id)
        for a, b in zip(entries, entries[1:]):
            if a.doc_id == b.doc_id:
                raise InputError(f"duplicate document id {a.doc_id!r}")
        for e in entries:
            if e.embedding.shape != (dimension,):
                raise InputError(f"{e.doc_id}: vector length {e.embedding.shape[0]} != dimension {dimension}")
        self.entries: tuple[IndexEntry, ...] = tuple(entries)
        self.dimension = dimension

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def build(cls, docs: Iterable[tuple[str, str, str | None]], dimension: int = 256,
              embedder: Callable[[str, int], np.ndarray] = embed) -> Index:
        """Index ``(doc_id, text, metadata_ref)`` triples."""
        return cls((IndexEntry(d, embedder(t, dimension), t, ref) for d, t, ref in docs), dimension)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "entries": [{"doc": e.doc_id,
                         "vector": [float(f"{v:.9g}") for v in e.embedding.tolist()],
                         "metadata_ref": e.metadata_ref} for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, doc: object) -> Index:
        try:
            dim = int(doc["dimension"])
            entries = [IndexEntry(str(e["doc"]), np.array(e["vector"], dtype=np.float64), "",
                                  e.get("metadata_ref")) for e in doc["entries"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed index document: {exc}") from None
        return cls(entries, dim)


def vector_search(index: Index, query_text: str, k: int = 10,
                  embedder: Callable[[str, int], np.ndarray] = embed) -> RankedList:
    if not len(index):
        raise EmptyIndex("cannot search an empty index")
    q = embedder(query_text, index.dimension)
    return RankedList({e.doc_id: cosine(q, e.embedding) for e in index.entries}).top(k)


def graph_expand(graph: ProjectGraph, seeds: Iterable[str], depth: int = 2) -> RankedList:
    """Breadth-first neighbourhood of ``seeds`` ignoring edge direction, scored 1/(1+distance)."""
    seeds = list(seeds)
    for s in seeds:
        if s not in graph:
            raise UnknownSeed(s)
    dist = {s: 0 for s in seeds}
    queue = deque(seeds)
    while queue:
        node = queue.popleft()
        if dist[node] >= depth:
            continue
        neighbours = {e.dst for e in graph.out_edges(node)} | {e.src for e in graph.in_edges(node)}
        for nb in sorted(neighbours):
            if nb not in dist:
                dist[nb] = dist[node] + 1
                queue.append(nb)
    return RankedList({n: 1.0 / (1 + d) for n, d in dist.items()})


def fuse_rrf(rankings: Sequence[RankedList], k0: int = 60) -> RankedList:
    """Reciprocal rank fusion: each list adds 1/(k0 + rank) for the documents it holds."""
    if not rankings:
        raise InputError("rank fusion needs at least one ranking")
    parts: dict[str, list[float]] = {}
    for ranking in rankings:
        for rank, (doc, _) in enumerate(ranking, start=1):
            parts.setdefault(doc, []).append(1.0 / (k0 + rank))
    return RankedList({doc: math.fsum(v) for doc, v in parts.items()})


# metadata predicates

_AND = re.compile(r"\s+AND\s+", re.IGNORECASE)
_FILTER_KEYS = ("object_type", "name", "reads", "writes", "calls")


def record_id(r: MetadataRecord) -> str:
    """Identifier used by filters: the normalized object name, or ``file@offset`` for scripts."""
    if r.object_type is ObjectType.SCRIPT:
        return f"{r.file or ''}@{r.span[0]}"
    return r.node_id


def _check_glob(pattern: str) -> None:
    if not pattern:
        raise BadGlob("empty name pattern")
    depth = 0
    for ch in pattern:
        if ch == "[":
            if depth:
                raise BadGlob(f"nested '[' in pattern {pattern!r}")
            depth = 1
        elif ch == "]" and depth:
            depth = 0
    if depth:
        raise BadGlob(f"unclosed '[' in pattern {pattern!r}")


def parse_predicate(predicate: str) -> list[tuple[str, str]]:
    predicate = (predicate or "").strip()
    if not predicate:
        return []
    clauses = []
    for clause in _AND.split(predicate):
        key, sep, value = clause.partition("=")
        key, value = key.strip().lower(), value.strip()
        if not sep or key not in _FILTER_KEYS or not value:
            raise BadPredicate(f"bad clause {clause!r}; expected KEY=VALUE with KEY in {', '.join(_FILTER_KEYS)}")
        if key == "object_type":
            try:
                value = next(t.value for t in ObjectType if t.value.lower() == value.lower())
            except StopIteration:
                raise BadPredicate(f"unknown object_type {value!r}") from None
        elif key == "name":
            _check_glob(value)
            value = value.lower()
        else:
            value = normalize_name(value)
        clauses.append((key, value))
    return clauses


def _satisfies(r: MetadataRecord, key: str, value: str) -> bool:
    if key == "object_type":
        return r.object_type.value == value
    if key == "name":
        return bool(r.object_name) and fnmatch.fnmatchcase(r.node_id, value)
    if key == "reads":
        return value in r.tables_read
    if key == "writes":
        return value in r.tables_written
    return value in r.called_routines


def metadata_filter(records: Iterable[MetadataRecord], predicate: str) -> set[str]:
    clauses = parse_predicate(predicate)
    return {record_id(r) for r in records if all(_satisfies(r, k, v) for k, v in clauses)}


def retrieve(query_text: str | None, seeds: Iterable[str] | None, predicate: str | None,
             index: Index, graph: ProjectGraph | None = None,
             records: Iterable[MetadataRecord] = (), cfg: RetrievalConfig | None = None) -> RankedList:
    """Run the enabled sources (vector, graph, metadata), restrict, fuse and truncate.

    With a single ranking source its own scores are kept; with several the
    result carries fused RRF scores.
    """
    cfg = cfg or RetrievalConfig()
    seeds = list(seeds or [])
    rankings: list[RankedList] = []
    if query_text is not None:
        rankings.append(vector_search(index, query_text, len(index)))
    if seeds:
        if graph is None:
            raise InputError("graph seeds given without a graph")
        nodes = graph_expand(graph, [normalize_name(s) if s not in graph else s for s in seeds],
                             cfg.graph_depth)
        node_score = dict(nodes)
        by_doc: dict[str, float] = {}
        for e in index.entries:
            if e.metadata_ref is None:
                continue
            score = node_score.get(normalize_name(e.metadata_ref))
            if score is not None:
                by_doc[e.doc_id] = score
        rankings.append(RankedList(by_doc))
    if predicate is not None and predicate.strip():
        survivors = metadata_filter(records, predicate)
        allowed = {e.doc_id for e in index.entries
                   if e.metadata_ref is not None and normalize_name(e.metadata_ref) in survivors}
        if rankings:
            rankings = [r.restrict(allowed) for r in rankings]
        else:
            rankings = [RankedList({d: 1.0 for d in allowed})]
    if not rankings:
        raise InputError("no retrieval source enabled: give query text, seeds or a filter")
    fused = rankings[0] if len(rankings) == 1 else fuse_rrf(rankings, cfg.rrf_k0)
    return fused.top(cfg.top_k)
