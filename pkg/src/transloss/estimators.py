"""scikit-learn style wrappers over the functional core.

Each wrapper keeps its constructor arguments as plain attributes (so
``get_params``/``set_params``/``clone`` work), validates them in ``fit`` and
stores learned or derived state in trailing-underscore attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .chunker import ChunkConfig, chunk_text
from .graph_mapping import NodeMapping
from .graph_model import ProjectGraph
from .loss_metrics import LossReport, LossWeights, compare
from .metadata_extract import MetadataRecord, extract, resolve_externals, to_graph
from .retrieval import Index, RankedList, RetrievalConfig, embed, retrieve
from .validation import check_dialect, check_positive_int, check_same_length, check_texts


class SqlChunker(TransformerMixin, BaseEstimator):
    """Split SQL documents into statement-aligned chunks."""

    def __init__(self, dialect="generic", min_tokens=64, max_tokens=1024):
        self.dialect = dialect
        self.min_tokens = min_tokens
        self.max_tokens = max_tokens

    def fit(self, X=None, y=None):
        self.dialect_ = check_dialect(self.dialect)
        check_positive_int("min_tokens", self.min_tokens)
        check_positive_int("max_tokens", self.max_tokens)
        self.config_ = ChunkConfig(self.min_tokens, self.max_tokens)
        return self

    def transform(self, X):
        """One list of chunks per input document."""
        check_is_fitted(self, "config_")
        return [chunk_text(doc, self.dialect_, self.config_) for doc in check_texts(X)]


class HashingEmbedder(TransformerMixin, BaseEstimator):
    def __init__(self, dimension=256):
        self.dimension = dimension

    def fit(self, X=None, y=None):
        self.n_features_out_ = check_positive_int("dimension", self.dimension)
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_out_")
        docs = check_texts(X)
        if not docs:
            return np.zeros((0, self.n_features_out_))
        return np.vstack([embed(d, self.n_features_out_) for d in docs])


class MetadataExtractor(TransformerMixin, BaseEstimator):
    """Documents to metadata records; ``graph_`` holds the dependency graph of the fitted corpus."""

    def __init__(self, dialect="generic"):
        self.dialect = dialect

    def fit(self, X, y=None, files=None):
        self.dialect_ = check_dialect(self.dialect)
        self.records_ = self._extract(X, files)
        self.graph_ = to_graph(self.records_)
        return self

    def _extract(self, X, files) -> list[MetadataRecord]:
        docs = check_texts(X)
        check_same_length("X", docs, "files", files)
        records = []
        for i, doc in enumerate(docs):
            records += extract(doc, self.dialect_, files[i] if files is not None else None)
        return resolve_externals(records)

    def transform(self, X, files=None):
        check_is_fitted(self, "dialect_")
        return self._extract(X, files)


class HybridRetriever(BaseEstimator):
    """Index documents in ``fit``; ``predict`` returns one ranking per query."""

    def __init__(self, dimension=256, top_k=10, graph_depth=2, rrf_k0=60):
        self.dimension = dimension
        self.top_k = top_k
        self.graph_depth = graph_depth
        self.rrf_k0 = rrf_k0

    def fit(self, X, y=None, doc_ids=None, metadata_refs=None, graph: ProjectGraph | None = None,
            records=None):
        self.config_ = RetrievalConfig(self.dimension, self.top_k, self.graph_depth, self.rrf_k0)
        texts = [d.decode("utf-8", errors="replace") for d in check_texts(X)]
        doc_ids = list(doc_ids) if doc_ids is not None else [f"doc{i:06d}" for i in range(len(texts))]
        refs = list(metadata_refs) if metadata_refs is not None else [None] * len(texts)
        check_same_length("X", texts, "doc_ids", doc_ids)
        check_same_length("X", texts, "metadata_refs", refs)
        self.index_ = Index.build(zip(doc_ids, texts, refs), self.config_.dimension)
        self.graph_ = graph
        self.records_ = list(records or [])
        return self

    def predict(self, X, seeds=None, predicate=None) -> list[RankedList]:
        check_is_fitted(self, "index_")
        queries = [q.decode("utf-8") for q in check_texts(X, "queries")]
        return [retrieve(q, seeds, predicate, self.index_, self.graph_, self.records_, self.config_)
                for q in queries]


class GraphSimilarity(BaseEstimator):
    """Score (source, target) graph pairs; ``transform`` gives all eight loss scalars per pair."""

    def __init__(self, gamma=0.5, lambda_=0.5, strict_kind=True):
        self.gamma = gamma
        self.lambda_ = lambda_
        self.strict_kind = strict_kind

    def fit(self, X=None, y=None):
        self.weights_ = LossWeights(self.gamma, self.lambda_)
        return self

    def reports(self, pairs, mappings=None) -> list[LossReport]:
        check_is_fitted(self, "weights_")
        pairs = list(pairs)
        mappings = list(mappings) if mappings is not None else ["auto"] * len(pairs)
        check_same_length("pairs", pairs, "mappings", mappings)
        return [compare(a, b, h if isinstance(h, str) else NodeMapping(h), self.weights_, self.strict_kind)
                for (a, b), h in zip(pairs, mappings)]

    def transform(self, pairs, mappings=None) -> np.ndarray:
        rows = [[getattr(r, k) for k in LossReport.SCALARS] for r in self.reports(pairs, mappings)]
        return np.array(rows, dtype=np.float64).reshape(len(rows), len(LossReport.SCALARS))

    def predict(self, pairs, mappings=None) -> np.ndarray:
        """Total similarity ``S`` per pair."""
        return np.array([r.S for r in self.reports(pairs, mappings)], dtype=np.float64)
