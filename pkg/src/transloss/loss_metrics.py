"""Graph transformation-loss metrics.

Given a source graph ``A``, a target graph ``B`` and a node mapping ``h``:

* ``alpha``: share of source edges whose image exists in ``B``.
* ``beta``: share of target edges that are the image of some source edge.
* ``H``: harmonic mean of alpha and beta; ``H_gamma`` its weighted form.
* ``delta_I``, ``delta_O``: set agreement between mapped and actual
  input (output) interface nodes; ``delta_IO`` is their mean.
* ``S``: ``lambda * H_gamma + (1 - lambda) * delta_IO``.

Degenerate cases are vacuous: an empty edge set or an empty interface
universe scores 1.0.
"""

from __future__ import annotations

import enum
from collections.abc import Mapping
from fractions import Fraction
from dataclasses import dataclass

from .errors import DirectionMismatch, MappingReferencesUnknownNode, OutOfRange
from .graph_mapping import MatchConfig, NodeMapping, build_mapping
from .graph_model import GraphEdge, ProjectGraph


def _check_unit(name: str, value: float) -> float:
    if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
        raise OutOfRange(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


@dataclass(frozen=True)
class LossWeights:
    gamma: float = 0.5
    lambda_: float = 0.5

    def __post_init__(self):
        _check_unit("gamma", self.gamma)
        _check_unit("lambda", self.lambda_)


class Direction(enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True)
class ViolationReport:
    direction: Direction
    total_edges: int
    violated: tuple[GraphEdge, ...]
    preserved_count: int

    def to_dict(self) -> dict:
        return {
            "direction": self.direction.value,
            "total_edges": self.total_edges,
            "preserved_count": self.preserved_count,
            "violated": [{"src": e.src, "dst": e.dst, "kind": e.kind.value} for e in self.violated],
        }


def _check_mapping(a: ProjectGraph, b: ProjectGraph, h: Mapping[str, str]) -> None:
    for src, dst in h.items():
        if src not in a:
            raise MappingReferencesUnknownNode(src, "source")
        if dst not in b:
            raise MappingReferencesUnknownNode(dst, "target")


def _key(e: GraphEdge, strict_kind: bool) -> tuple:
    return (e.src, e.dst, e.kind) if strict_kind else (e.src, e.dst)


def _image(e: GraphEdge, h: Mapping[str, str], strict_kind: bool) -> tuple | None:
    u, v = h.get(e.src), h.get(e.dst)
    if u is None or v is None:
        return None
    return (u, v, e.kind) if strict_kind else (u, v)


def _report(direction: Direction, edges, is_kept) -> ViolationReport:
    violated = tuple(sorted((e for e in edges if not is_kept(e)), key=GraphEdge.sort_key))
    return ViolationReport(direction, len(edges), violated, len(edges) - len(violated))


def forward_violations(a: ProjectGraph, b: ProjectGraph, h: Mapping[str, str],
                       strict_kind: bool = True) -> ViolationReport:
    """Source edges whose image under ``h`` is missing from ``b``."""
    _check_mapping(a, b, h)
    present = {_key(e, strict_kind) for e in b.edges}
    return _report(Direction.FORWARD, a.edges,
                   lambda e: _image(e, h, strict_kind) in present)


def backward_violations(a: ProjectGraph, b: ProjectGraph, h: Mapping[str, str],
                        strict_kind: bool = True) -> ViolationReport:
    """Target edges that no source edge maps onto."""
    _check_mapping(a, b, h)
    images = {_image(e, h, strict_kind) for e in a.edges}
    images.discard(None)
    return _report(Direction.BACKWARD, b.edges,
                   lambda e: _key(e, strict_kind) in images)


def _preservation(report: ViolationReport) -> float:
    if report.total_edges == 0:
        return 1.0
    # one division of exact integers: the correctly rounded value of 1 - violated/total
    return (report.total_edges - len(report.violated)) / report.total_edges


def alpha(report: ViolationReport) -> float:
    if report.direction is not Direction.FORWARD:
        raise DirectionMismatch("alpha needs a forward violation report")
    return _preservation(report)


def beta(report: ViolationReport) -> float:
    if report.direction is not Direction.BACKWARD:
        raise DirectionMismatch("beta needs a backward violation report")
    return _preservation(report)


def harmonic(a: float, b: float) -> float:
    """Unweighted harmonic mean ``2ab / (a + b)``; 0 when both are 0."""
    _check_unit("alpha", a)
    _check_unit("beta", b)
    if a == b:
        return float(a)
    return 2.0 * a * b / (a + b)


def weighted_harmonic(a: float, b: float, gamma: float) -> float:
    """Weighted harmonic mean ``1 / (gamma/a + (1-gamma)/b)``.

    Limits: gamma=0 gives ``b``, gamma=1 gives ``a``; otherwise a zero
    argument carrying positive weight gives 0.
    """
    a, b, gamma = _check_unit("alpha", a), _check_unit("beta", b), _check_unit("gamma", gamma)
    if gamma == 0.0:
        return b
    if gamma == 1.0:
        return a
    if a == 0.0 or b == 0.0:
        return 0.0
    if a == b:
        return a
    # same quantity as 1 / (gamma/a + (1-gamma)/b), with a single final division
    value = a * b / (gamma * b + (1.0 - gamma) * a)
    # the exact value lies between a and b; keep rounding from leaving that interval
    return min(max(value, min(a, b)), max(a, b))


def _agreement(image: set, actual: frozenset) -> Fraction:
    union = image | actual
    if not union:
        return Fraction(1)
    return Fraction(len(union) - len(image ^ actual), len(union))


def _mapped_set(nodes: frozenset[str], h: Mapping[str, str]) -> set:
    # unmapped interface nodes stay distinct from every target node
    return {h[u] if u in h else ("<phantom>", u) for u in nodes}


def interface_delta(a: ProjectGraph, b: ProjectGraph, h: Mapping[str, str]) -> tuple[float, float, float]:
    d_in = _agreement(_mapped_set(a.inputs, h), b.inputs)
    d_out = _agreement(_mapped_set(a.outputs, h), b.outputs)
    return float(d_in), float(d_out), float((d_in + d_out) / 2)


def total_similarity(h_gamma: float, delta_io: float, lam: float) -> float:
    h_gamma = _check_unit("H_gamma", h_gamma)
    delta_io = _check_unit("delta_IO", delta_io)
    lam = _check_unit("lambda", lam)
    if lam == 1.0 or h_gamma == delta_io:
        return h_gamma
    if lam == 0.0:
        return delta_io
    value = lam * h_gamma + (1.0 - lam) * delta_io
    return min(max(value, min(h_gamma, delta_io)), max(h_gamma, delta_io))


def _blend(al: float, be: float, gamma: float, d_io: float, lam: float) -> tuple[float, float]:
    """(H_gamma, S) from the underlying ratios.

    S is formed over the common denominator of H_gamma so it is not rounded
    twice; the endpoint conventions are those of the two public functions.
    """
    h_gamma = weighted_harmonic(al, be, gamma)
    if lam in (0.0, 1.0) or gamma in (0.0, 1.0) or al == 0.0 or be == 0.0 or al == be or h_gamma == d_io:
        return h_gamma, total_similarity(h_gamma, d_io, lam)
    den = gamma * be + (1.0 - gamma) * al
    value = (lam * al * be + (1.0 - lam) * d_io * den) / den
    return h_gamma, min(max(value, min(h_gamma, d_io)), max(h_gamma, d_io))


@dataclass(frozen=True)
class LossReport:
    alpha: float
    beta: float
    H: float
    H_gamma: float
    delta_I: float
    delta_O: float
    delta_IO: float
    S: float
    forward: ViolationReport
    backward: ViolationReport
    weights: LossWeights
    mapping: NodeMapping | None = None

    SCALARS = ("alpha", "beta", "H", "H_gamma", "delta_I", "delta_O", "delta_IO", "S")

    def to_dict(self) -> dict:
        doc = {name: round(getattr(self, name), 12) for name in self.SCALARS}
        doc["forward"] = self.forward.to_dict()
        doc["backward"] = self.backward.to_dict()
        doc["weights"] = {"gamma": self.weights.gamma, "lambda": self.weights.lambda_}
        if self.mapping is not None:
            doc["mapping"] = self.mapping.to_dict()["pairs"]
        return doc


def compare(a: ProjectGraph, b: ProjectGraph, h: Mapping[str, str] | str = "auto",
            weights: LossWeights | None = None, strict_kind: bool = True,
            match_config: MatchConfig | None = None) -> LossReport:
    """Full loss report for ``a`` against ``b``.

    ``h="auto"`` builds the mapping with :func:`build_mapping`.
    """
    weights = weights or LossWeights()
    if isinstance(h, str):
        if h != "auto":
            raise ValueError(f"h must be a mapping or 'auto', got {h!r}")
        h = build_mapping(a, b, match_config)
    elif not isinstance(h, NodeMapping):
        h = NodeMapping(h)

    fwd = forward_violations(a, b, h, strict_kind)
    bwd = backward_violations(a, b, h, strict_kind)
    al, be = alpha(fwd), beta(bwd)
    d_in, d_out, d_io = interface_delta(a, b, h)
    h_gamma, total = _blend(al, be, weights.gamma, d_io, weights.lambda_)
    return LossReport(
        alpha=al, beta=be, H=harmonic(al, be), H_gamma=h_gamma,
        delta_I=d_in, delta_O=d_out, delta_IO=d_io,
        S=total,
        forward=fwd, backward=bwd, weights=weights, mapping=h,
    )


def similarity(a: ProjectGraph, b: ProjectGraph, h: Mapping[str, str],
               weights: LossWeights | None = None, strict_kind: bool = True) -> float:
    """Total similarity ``S`` only, without building violation reports.

    ``h`` is trusted to reference existing nodes; this is the inner loop of
    the exhaustive search.
    """
    weights = weights or LossWeights()
    present = {_key(e, strict_kind) for e in b.edges}
    images = set()
    lost = 0
    for e in a.edges:
        img = _image(e, h, strict_kind)
        if img is not None:
            images.add(img)
        if img is None or img not in present:
            lost += 1
    unmatched = sum(1 for e in b.edges if _key(e, strict_kind) not in images)
    al = (len(a.edges) - lost) / len(a.edges) if a.edges else 1.0
    be = (len(b.edges) - unmatched) / len(b.edges) if b.edges else 1.0
    _, _, d_io = interface_delta(a, b, h)
    return _blend(al, be, weights.gamma, d_io, weights.lambda_)[1]

