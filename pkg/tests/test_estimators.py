import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from transloss.errors import InputError
from transloss.estimators import GraphSimilarity, HashingEmbedder, HybridRetriever, MetadataExtractor, SqlChunker
from transloss.graph_model import EdgeKind, GraphEdge, GraphNode, NodeKind, ProjectGraph
from transloss.retrieval import embed

DOCS = ["SELECT 1; SELECT 2;", "CREATE VIEW v AS SELECT c FROM t;"]


def test_params_and_clone():
    est = SqlChunker(dialect="tsql", min_tokens=2, max_tokens=9)
    assert est.get_params() == {"dialect": "tsql", "min_tokens": 2, "max_tokens": 9}
    copy = clone(est).set_params(max_tokens=50)
    assert copy.max_tokens == 50 and est.max_tokens == 9


def test_unfitted_use_raises():
    with pytest.raises(NotFittedError):
        HashingEmbedder().transform(DOCS)


def test_chunker_wrapper_matches_core():
    chunks = SqlChunker(min_tokens=1, max_tokens=3).fit().transform(DOCS)
    assert [len(c) for c in chunks] == [2, 1]


def test_chunker_validates_in_fit():
    with pytest.raises(InputError):
        SqlChunker(min_tokens=0).fit()
    with pytest.raises(ValueError):
        SqlChunker(dialect="cobol").fit()


def test_embedder_shape_and_values():
    X = HashingEmbedder(dimension=32).fit_transform(DOCS)
    assert X.shape == (2, 32)
    assert np.array_equal(X[1], embed(DOCS[1], 32))


def test_extractor_graph():
    ext = MetadataExtractor().fit(DOCS)
    assert set(ext.graph_.nodes) == {"v", "t"}
    assert len(ext.transform(DOCS)) == 3


def test_retriever_predict():
    ret = HybridRetriever(top_k=1).fit(DOCS, doc_ids=["a", "b"])
    (ranking,) = ret.predict([DOCS[1]])
    assert ranking.doc_ids == ["b"]


def test_graph_similarity():
    g = ProjectGraph.from_parts([GraphNode("a", "a", NodeKind.FUNCTION), GraphNode("b", "b", NodeKind.TABLE)],
                                [GraphEdge("a", "b", EdgeKind.READS)])
    sim = GraphSimilarity().fit()
    assert sim.predict([(g, g)]).tolist() == [1.0]
    assert sim.transform([(g, g), (g, g)]).shape == (2, 8)


def test_pipeline_composition():
    pipe = make_pipeline(HashingEmbedder(dimension=16))
    assert pipe.fit_transform(DOCS).shape == (2, 16)
