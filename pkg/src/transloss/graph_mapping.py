"""Construction of the node mapping from a source graph onto a target graph.

The mapping is partial and many-to-one. :func:`build_mapping` matches on
normalized names only (exact first, then token-set Jaccard); structure is
deliberately ignored so the mapping stays independent of the similarity
metrics it feeds. :func:`exhaustive_best_mapping` is the brute-force oracle
for tiny graphs: it searches every kind-compatible partial map for the one
maximizing total similarity.
"""

from __future__ import annotations

import itertools
import json
import re
from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Iterator

from .errors import GraphTooLarge, InputError, MalformedDocument, MappingReferencesUnknownNode, OutOfRange
from .graph_model import NodeKind, ProjectGraph

_TIE_EPS = 1e-12


class NodeMapping(Mapping):
    """Immutable partial function from source node ids to target node ids."""

    __slots__ = ("_pairs",)

    def __init__(self, pairs: Mapping[str, str] | Iterator[tuple[str, str]] | None = None):
        items = pairs.items() if isinstance(pairs, Mapping) else (pairs or ())
        data: dict[str, str] = {}
        for src, dst in items:
            if src in data:
                raise MalformedDocument(f"source node {src!r} is mapped more than once")
            data[src] = dst
        self._pairs = data

    def __getitem__(self, key: str) -> str:
        return self._pairs[key]

    def __iter__(self):
        return iter(self._pairs)

    def __len__(self) -> int:
        return len(self._pairs)

    def __repr__(self):
        return f"NodeMapping({dict(self.sorted_pairs())!r})"

    def __eq__(self, other):
        if isinstance(other, Mapping):
            return dict(self._pairs) == dict(other)
        return NotImplemented

    __hash__ = None

    def sorted_pairs(self) -> list[tuple[str, str]]:
        return sorted(self._pairs.items())

    def validate(self, a: ProjectGraph, b: ProjectGraph) -> None:
        for src, dst in self._pairs.items():
            if src not in a:
                raise MappingReferencesUnknownNode(src, "source")
            if dst not in b:
                raise MappingReferencesUnknownNode(dst, "target")

    @classmethod
    def identity(cls, g: ProjectGraph) -> NodeMapping:
        return cls({n: n for n in g.nodes})

    def to_dict(self) -> dict:
        return {"pairs": [{"source": s, "target": t} for s, t in self.sorted_pairs()]}

    @classmethod
    def from_dict(cls, doc: object) -> NodeMapping:
        if not isinstance(doc, dict) or not isinstance(doc.get("pairs"), list):
            raise MalformedDocument("mapping document must be an object with a 'pairs' array")
        pairs = []
        for item in doc["pairs"]:
            if not (isinstance(item, dict) and isinstance(item.get("source"), str)
                    and isinstance(item.get("target"), str)):
                raise MalformedDocument("each mapping pair needs string 'source' and 'target'")
            pairs.append((item["source"], item["target"]))
        return cls(iter(pairs))


def parse_mapping(document: str) -> NodeMapping:
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from None
    return NodeMapping.from_dict(doc)


_DEFAULT_CLASSES = (
    frozenset({NodeKind.PROCEDURE, NodeKind.FUNCTION}),
    *(frozenset({k}) for k in NodeKind if k not in (NodeKind.PROCEDURE, NodeKind.FUNCTION)),
)


@dataclass(frozen=True)
class MatchConfig:
    case_fold: bool = True
    strip_quoting: bool = True
    strip_schema_prefix: bool = False
    kind_classes: tuple[frozenset[NodeKind], ...] = _DEFAULT_CLASSES
    fuzzy_threshold: float = 0.8
    exhaustive_limit: int = 6
    _class_of: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not 0.0 <= self.fuzzy_threshold <= 1.0:
            raise OutOfRange(f"fuzzy_threshold must lie in [0, 1], got {self.fuzzy_threshold}")
        if self.exhaustive_limit < 1:
            raise OutOfRange(f"exhaustive_limit must be >= 1, got {self.exhaustive_limit}")
        class_of = {}
        for i, group in enumerate(self.kind_classes):
            for kind in group:
                if kind in class_of:
                    raise InputError(f"kind {kind.value} appears in more than one kind class")
                class_of[kind] = i
        if set(class_of) != set(NodeKind):
            missing = sorted(k.value for k in set(NodeKind) - set(class_of))
            raise InputError(f"kind_classes must partition NodeKind; missing {missing}")
        object.__setattr__(self, "_class_of", class_of)

    def compatible(self, a: NodeKind, b: NodeKind) -> bool:
        return self._class_of[a] == self._class_of[b]


_QUOTE_PAIRS = {'"': '"', "[": "]", "`": "`"}
_ASCII_LOWER = str.maketrans("ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz")


def _strip(raw: str, cfg: MatchConfig) -> str:
    s = raw
    if cfg.strip_quoting and len(s) >= 2 and _QUOTE_PAIRS.get(s[0]) == s[-1]:
        s = s[1:-1]
    if cfg.strip_schema_prefix:
        s = s.rpartition(".")[2]
    return s


def normalize_name(raw: str, cfg: MatchConfig | None = None) -> str:
    """Canonical match key: unquote one layer, optionally drop the schema, ASCII case-fold."""
    cfg = cfg or DEFAULT_MATCH
    s = _strip(raw, cfg)
    return s.translate(_ASCII_LOWER) if cfg.case_fold else s


_CAMEL = re.compile(r"(?<=[a-z])(?=[A-Z])|(?<=[A-Za-z])(?=[0-9])|(?<=[0-9])(?=[A-Za-z])")
_SEPARATORS = re.compile(r"[_.\s]+")


def name_tokens(raw: str, cfg: MatchConfig | None = None) -> frozenset[str]:
    """Token set of a name for fuzzy matching.

    Case transitions are detected before folding, so ``getOrder`` and
    ``get_order`` share the tokens ``{get, order}``.
    """
    cfg = cfg or DEFAULT_MATCH
    s = _CAMEL.sub(" ", _strip(raw, cfg))
    if cfg.case_fold:
        s = s.translate(_ASCII_LOWER)
    return frozenset(t for t in _SEPARATORS.split(s) if t)


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


DEFAULT_MATCH = MatchConfig()


def build_mapping(a: ProjectGraph, b: ProjectGraph, cfg: MatchConfig | None = None) -> NodeMapping:
    """Deterministic name-based mapping from ``a`` onto ``b``."""
    cfg = cfg or DEFAULT_MATCH
    by_name: dict[str, list] = defaultdict(list)
    for t in b.nodes.values():
        by_name[normalize_name(t.name, cfg)].append(t)

    pairs: dict[str, str] = {}
    sources = [a.nodes[i] for i in a.sorted_node_ids()]
    for s in sources:
        candidates = [t for t in by_name.get(normalize_name(s.name, cfg), ())
                      if cfg.compatible(s.kind, t.kind)]
        if candidates:
            best = min(candidates, key=lambda t: (t.kind is not s.kind, t.id))
            pairs[s.id] = best.id

    target_tokens = [(t, name_tokens(t.name, cfg)) for t in (b.nodes[i] for i in b.sorted_node_ids())]
    for s in sources:
        if s.id in pairs:
            continue
        tokens = name_tokens(s.name, cfg)
        best_key, best_id = None, None
        for t, t_tokens in target_tokens:
            if not cfg.compatible(s.kind, t.kind):
                continue
            key = (-jaccard(tokens, t_tokens), t.id)
            if best_key is None or key < best_key:
                best_key, best_id = key, t.id
        if best_key is not None and -best_key[0] >= cfg.fuzzy_threshold:
            pairs[s.id] = best_id
    return NodeMapping(pairs)


def exhaustive_best_mapping(a: ProjectGraph, b: ProjectGraph, cfg: MatchConfig | None = None,
                            weights=None, strict_kind: bool = True) -> tuple[NodeMapping, float]:
    """Brute-force the kind-compatible partial map that maximizes total similarity.

    Ties (within 1e-12) go to the lexicographically smallest sorted pair list.
    """
    from .loss_metrics import LossWeights, similarity

    cfg = cfg or DEFAULT_MATCH
    weights = weights or LossWeights()
    for g in (a, b):
        if len(g) > cfg.exhaustive_limit:
            raise GraphTooLarge(cfg.exhaustive_limit, len(g))

    sources = a.sorted_node_ids()
    targets = [b.nodes[i] for i in b.sorted_node_ids()]
    options = [
        [None] + [t.id for t in targets if cfg.compatible(a.nodes[s].kind, t.kind)]
        for s in sources
    ]
    best_s = -1.0
    best_pairs: list[tuple[str, str]] = []
    for choice in itertools.product(*options):
        h = {s: t for s, t in zip(sources, choice) if t is not None}
        score = similarity(a, b, h, weights, strict_kind)
        if score > best_s + _TIE_EPS:
            best_s, best_pairs = score, sorted(h.items())
        elif score >= best_s - _TIE_EPS:
            pairs = sorted(h.items())
            if pairs < best_pairs:
                best_s, best_pairs = score, pairs
    return NodeMapping(dict(best_pairs)), best_s
