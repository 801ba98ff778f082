"""Typed directed dependency graphs for source and target systems.

Graphs are immutable once built. They load from and serialize to the
graph-JSON document format::

    {"nodes": [{"id": "...", "name": "...", "kind": "TABLE",
                "interface": "input" | "output" | null, "attrs": {...}}],
     "edges": [{"src": "...", "dst": "...", "kind": "READS"}]}
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import DanglingEdge, DuplicateNodeId, MalformedDocument, UnknownKind


class NodeKind(enum.Enum):
    FILE = "FILE"
    MODULE = "MODULE"
    PROCEDURE = "PROCEDURE"
    FUNCTION = "FUNCTION"
    CLASS = "CLASS"
    TABLE = "TABLE"
    VIEW = "VIEW"
    REPORT = "REPORT"
    API = "API"
    SERVICE = "SERVICE"
    EXTERNAL = "EXTERNAL"

    @classmethod
    def parse(cls, value: object) -> NodeKind:
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise UnknownKind(value) from None


class EdgeKind(enum.Enum):
    READS = "READS"
    WRITES = "WRITES"
    CALLS = "CALLS"
    IMPORTS = "IMPORTS"
    MODIFIES = "MODIFIES"
    DEPENDS_ON = "DEPENDS_ON"
    GENERATES = "GENERATES"
    INVOKES = "INVOKES"
    USES = "USES"

    @classmethod
    def parse(cls, value: object) -> EdgeKind:
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise UnknownKind(value) from None


# accepted on input only; stored as MODIFIES with endpoints swapped
MODIFIED_BY = "MODIFIED_BY"


class InterfaceRole(enum.Enum):
    INPUT = "input"
    OUTPUT = "output"
    NONE = None

    @classmethod
    def parse(cls, value: object) -> InterfaceRole:
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise UnknownKind(value) from None


@dataclass(frozen=True)
class GraphNode:
    id: str
    name: str
    kind: NodeKind
    interface: InterfaceRole = InterfaceRole.NONE
    attrs: Mapping[str, str] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise MalformedDocument("node id must be a non-empty string")
        if not isinstance(self.name, str) or not self.name:
            raise MalformedDocument(f"node {self.id!r} needs a non-empty name")
        object.__setattr__(self, "kind", NodeKind.parse(self.kind))
        object.__setattr__(self, "interface", InterfaceRole.parse(self.interface))
        object.__setattr__(self, "attrs", MappingProxyType(dict(self.attrs)))

    def __eq__(self, other):
        if not isinstance(other, GraphNode):
            return NotImplemented
        return (self.id, self.name, self.kind, self.interface, dict(self.attrs)) == (
            other.id, other.name, other.kind, other.interface, dict(other.attrs))

    def __hash__(self):
        return hash((self.id, self.name, self.kind, self.interface))

    def __reduce__(self):
        return (GraphNode, (self.id, self.name, self.kind, self.interface, dict(self.attrs)))


@dataclass(frozen=True)
class GraphEdge:
    src: str
    dst: str
    kind: EdgeKind

    def __post_init__(self):
        object.__setattr__(self, "kind", EdgeKind.parse(self.kind))

    def sort_key(self) -> tuple[str, str, str]:
        return (self.src, self.dst, self.kind.value)


class ProjectGraph:
    """An immutable typed dependency graph.

    Build one with :meth:`from_parts` or :func:`parse_graph`; both validate
    node uniqueness and edge endpoints and deduplicate repeated edges.
    """

    __slots__ = ("_nodes", "_edges", "duplicate_edges", "warnings", "_out", "_in")

    def __init__(self, nodes: Mapping[str, GraphNode], edges: frozenset[GraphEdge],
                 duplicate_edges: int = 0, warnings: tuple[str, ...] = ()):
        self._nodes = MappingProxyType(dict(nodes))
        self._edges = frozenset(edges)
        self.duplicate_edges = duplicate_edges
        self.warnings = tuple(warnings)
        out: dict[str, list[GraphEdge]] = {n: [] for n in self._nodes}
        inc: dict[str, list[GraphEdge]] = {n: [] for n in self._nodes}
        for e in self._edges:
            out[e.src].append(e)
            inc[e.dst].append(e)
        self._out = out
        self._in = inc

    @classmethod
    def from_parts(cls, nodes: Iterable[GraphNode], edges: Iterable[GraphEdge | tuple],
                   warnings: Iterable[str] = ()) -> ProjectGraph:
        by_id: dict[str, GraphNode] = {}
        for node in nodes:
            if node.id in by_id:
                raise DuplicateNodeId(node.id)
            by_id[node.id] = node
        seen: set[GraphEdge] = set()
        dupes = 0
        for edge in edges:
            if not isinstance(edge, GraphEdge):
                edge = GraphEdge(*edge)
            if edge.src not in by_id or edge.dst not in by_id:
                raise DanglingEdge(edge.src, edge.dst)
            if edge in seen:
                dupes += 1
            seen.add(edge)
        return cls(by_id, frozenset(seen), dupes, tuple(warnings))

    @property
    def nodes(self) -> Mapping[str, GraphNode]:
        return self._nodes

    @property
    def edges(self) -> frozenset[GraphEdge]:
        return self._edges

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._nodes

    def out_edges(self, node_id: str) -> list[GraphEdge]:
        return self._out[node_id]

    def in_edges(self, node_id: str) -> list[GraphEdge]:
        return self._in[node_id]

    def with_role(self, role: InterfaceRole) -> frozenset[str]:
        return frozenset(n.id for n in self._nodes.values() if n.interface is role)

    @property
    def inputs(self) -> frozenset[str]:
        return self.with_role(InterfaceRole.INPUT)

    @property
    def outputs(self) -> frozenset[str]:
        return self.with_role(InterfaceRole.OUTPUT)

    def sorted_node_ids(self) -> list[str]:
        return sorted(self._nodes)

    def sorted_edges(self) -> list[GraphEdge]:
        return sorted(self._edges, key=GraphEdge.sort_key)

    def __eq__(self, other):
        if not isinstance(other, ProjectGraph):
            return NotImplemented
        return dict(self._nodes) == dict(other._nodes) and self._edges == other._edges

    __hash__ = None

    def __repr__(self):
        return f"ProjectGraph(|V|={len(self._nodes)}, |E|={len(self._edges)})"


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise MalformedDocument(message)


def graph_from_dict(doc: object) -> ProjectGraph:
    _require(isinstance(doc, dict), "graph document must be a JSON object")
    nodes_raw = doc.get("nodes", [])
    edges_raw = doc.get("edges", [])
    _require(isinstance(nodes_raw, list), "'nodes' must be an array")
    _require(isinstance(edges_raw, list), "'edges' must be an array")

    nodes = []
    for item in nodes_raw:
        _require(isinstance(item, dict), "each node must be an object")
        _require(isinstance(item.get("id"), str), "node 'id' must be a string")
        _require(isinstance(item.get("name"), str), f"node {item.get('id')!r}: 'name' must be a string")
        _require(isinstance(item.get("kind"), str), f"node {item['id']!r}: 'kind' must be a string")
        attrs = item.get("attrs") or {}
        _require(isinstance(attrs, dict) and all(isinstance(k, str) and isinstance(v, str)
                                                 for k, v in attrs.items()),
                 f"node {item['id']!r}: 'attrs' must map strings to strings")
        nodes.append(GraphNode(item["id"], item["name"], NodeKind.parse(item["kind"]),
                               InterfaceRole.parse(item.get("interface")), attrs))

    edges = []
    for item in edges_raw:
        _require(isinstance(item, dict), "each edge must be an object")
        src, dst, kind = item.get("src"), item.get("dst"), item.get("kind")
        _require(isinstance(src, str) and isinstance(dst, str) and isinstance(kind, str),
                 "edge 'src', 'dst' and 'kind' must be strings")
        if kind == MODIFIED_BY:
            edges.append(GraphEdge(dst, src, EdgeKind.MODIFIES))
        else:
            edges.append(GraphEdge(src, dst, EdgeKind.parse(kind)))
    return ProjectGraph.from_parts(nodes, edges)


def parse_graph(document: str | bytes) -> ProjectGraph:
    """Parse and validate a graph-JSON document."""
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument(f"graph document is not UTF-8: {exc}") from None
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from None
    return graph_from_dict(doc)


def graph_to_dict(g: ProjectGraph) -> dict:
    return {
        "nodes": [
            {
                "id": n.id,
                "name": n.name,
                "kind": n.kind.value,
                "interface": n.interface.value,
                "attrs": dict(sorted(n.attrs.items())),
            }
            for n in (g.nodes[i] for i in g.sorted_node_ids())
        ],
        "edges": [{"src": e.src, "dst": e.dst, "kind": e.kind.value} for e in g.sorted_edges()],
    }


def serialize_graph(g: ProjectGraph) -> str:
    return json.dumps(graph_to_dict(g), indent=2, ensure_ascii=False) + "\n"


@dataclass(frozen=True)
class InferencePolicy:
    input_kinds: frozenset[NodeKind] = frozenset({NodeKind.API, NodeKind.SERVICE, NodeKind.PROCEDURE})
    output_kinds: frozenset[NodeKind] = frozenset({NodeKind.REPORT, NodeKind.VIEW})


_ENTRY_EDGES = (EdgeKind.CALLS, EdgeKind.INVOKES)


def infer_interfaces(g: ProjectGraph, policy: InferencePolicy | None = None) -> ProjectGraph:
    """Annotate unannotated nodes with a heuristic interface role.

    Entry points (input kinds nobody calls or invokes) become inputs; sinks of an
    output kind (no outgoing edge at all) become outputs. Nodes that already
    carry a role keep it.
    """
    policy = policy or InferencePolicy()
    nodes = []
    for node in g.nodes.values():
        role = node.interface
        if role is InterfaceRole.NONE:
            if node.kind in policy.input_kinds and not any(
                    e.kind in _ENTRY_EDGES for e in g.in_edges(node.id)):
                role = InterfaceRole.INPUT
            elif node.kind in policy.output_kinds and not g.out_edges(node.id):
                role = InterfaceRole.OUTPUT
        nodes.append(node if role is node.interface else replace(node, interface=role))
    return ProjectGraph({n.id: n for n in nodes}, g.edges, g.duplicate_edges, g.warnings)
