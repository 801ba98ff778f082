"""Transformation-loss, chunking, metadata and retrieval metrics for SQL code bases."""

__version__ = "0.1.0"

from .chunk_metrics import ChunkMetricsReport, GoldSegmentation, evaluate as evaluate_chunks
from .chunker import Chunk, ChunkConfig, StatementSpan, Terminator, chunk_text, split_statements
from .errors import InputError, PreconditionError, TranslossError
from .graph_mapping import MatchConfig, NodeMapping, build_mapping, exhaustive_best_mapping, normalize_name
from .graph_model import EdgeKind, GraphEdge, GraphNode, InterfaceRole, NodeKind, ProjectGraph, parse_graph
from .lexer import Dialect, Token, TokenKind, lex
from .loss_metrics import LossReport, LossWeights, compare, weighted_harmonic
from .metadata_extract import MetadataRecord, ObjectType, extract, to_graph
from .retrieval import Index, RankedList, RetrievalConfig, embed, fuse_rrf, retrieve
from .text_metrics import FactIndex, JudgmentRecord, Metric, entity_recall, ground_statement, score

__all__ = [
    "Chunk", "ChunkConfig", "ChunkMetricsReport", "Dialect", "EdgeKind", "FactIndex", "GoldSegmentation",
    "GraphEdge", "GraphNode", "Index", "InputError", "InterfaceRole", "JudgmentRecord", "LossReport",
    "LossWeights", "MatchConfig", "MetadataRecord", "Metric", "NodeKind", "NodeMapping", "ObjectType",
    "PreconditionError", "ProjectGraph", "RankedList", "RetrievalConfig", "StatementSpan", "Terminator",
    "Token", "TokenKind", "TranslossError", "build_mapping", "chunk_text", "compare", "embed",
    "entity_recall", "evaluate_chunks", "exhaustive_best_mapping", "extract", "fuse_rrf",
    "ground_statement", "lex", "normalize_name", "parse_graph", "retrieve", "score", "split_statements",
    "to_graph", "weighted_harmonic",
]
