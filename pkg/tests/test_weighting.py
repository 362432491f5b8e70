import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import graph_from_edges, kg_from_rows, simple_graphs, trees
from triplewalk.errors import ConfigError, GraphError
from triplewalk.models.schemas import BlendCoefficients
from triplewalk.services.line_graph import build_line_graph, build_triple_line_graph
from triplewalk.services.weighting import (
    current_flow_betweenness, floor_weights, laplacian_pseudoinverse, predicate_cooccurrence,
    predicate_counts, predicate_relatedness, relatedness_for_graph, weigh_uniform,
    weight_homogeneous_line_graph, weight_kg_line_graph,
)


# ---------------------------------------------------------------- relatedness

def test_cooccurrence_single_triple():
    C = predicate_cooccurrence(kg_from_rows([("a", "p", "b")]))
    np.testing.assert_array_equal(C, np.zeros((1, 1)))


def test_cooccurrence_distinct_predicates():
    g = kg_from_rows([("a", "p", "b"), ("a", "q", "c")])
    np.testing.assert_array_equal(predicate_cooccurrence(g), [[0, 1], [1, 0]])


def test_cooccurrence_same_predicate():
    g = kg_from_rows([("a", "p", "b"), ("a", "p", "c")])
    np.testing.assert_array_equal(predicate_cooccurrence(g), [[1]])


def test_cooccurrence_matches_pair_enumeration(movie_kg):
    L = build_triple_line_graph(movie_kg)
    expected = np.zeros((movie_kg.num_predicates,) * 2)
    p = movie_kg.triples[:, 1]
    for a, b in L.edge_set():
        expected[p[a], p[b]] += 1
        if p[a] != p[b]:
            expected[p[b], p[a]] += 1
    np.testing.assert_array_equal(predicate_cooccurrence(movie_kg, L), expected)


def test_relatedness_identical_and_orthogonal_rows():
    R = predicate_relatedness(np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    assert R[0, 1] == pytest.approx(1.0)
    assert R[0, 2] == pytest.approx(0.0)


def test_relatedness_diagonal_is_one_even_for_isolated_predicates():
    assert np.diag(predicate_relatedness(np.zeros((2, 2)))).tolist() == [1.0, 1.0]


def test_relatedness_matches_dense_cosine_oracle():
    g = kg_from_rows([
        ("a", "p", "b"), ("b", "q", "c"), ("c", "r", "d"),
        ("a", "p", "e"), ("e", "q", "f"), ("b", "r", "f"),
    ])
    C = predicate_cooccurrence(g)
    freq = predicate_counts(g).astype(float)
    idf = np.log(1.0 + freq.sum() / (1.0 + freq))
    scaled = C * idf
    expected = np.empty_like(C)
    for i, j in itertools.product(range(3), repeat=2):
        norm = np.linalg.norm(scaled[i]) * np.linalg.norm(scaled[j])
        expected[i, j] = scaled[i] @ scaled[j] / norm if norm else 0.0
    np.fill_diagonal(expected, 1.0)
    np.testing.assert_allclose(relatedness_for_graph(g), expected, atol=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_relatedness_ignores_row_scaling(seed):
    rng = np.random.default_rng(seed)
    C = rng.integers(0, 5, size=(5, 5)).astype(float)
    C = C + C.T
    scales = rng.uniform(0.1, 10.0, size=(5, 1))
    freq = rng.integers(1, 20, size=5)
    np.testing.assert_allclose(predicate_relatedness(C * scales), predicate_relatedness(C), atol=1e-12)
    np.testing.assert_allclose(predicate_relatedness(C * 3.5, freq), predicate_relatedness(C, freq), atol=1e-12)


def test_relatedness_rejects_bad_input():
    with pytest.raises(GraphError):
        predicate_relatedness(np.ones((2, 3)))
    with pytest.raises(GraphError):
        predicate_relatedness(np.ones((2, 2)), frequencies=np.ones(3))


def test_same_predicate_edge_has_weight_one(movie_kg):
    L = build_triple_line_graph(movie_kg)
    W = weight_kg_line_graph(L, relatedness_for_graph(movie_kg, L))
    starring = movie_kg.predicate_id("starring")
    for (a, b), w in zip(L.edges.tolist(), W.weights.tolist()):
        if movie_kg.triples[a, 1] == starring and movie_kg.triples[b, 1] == starring:
            assert w == pytest.approx(1.0)


def test_edge_weight_is_predicate_relatedness(movie_kg):
    L = build_triple_line_graph(movie_kg)
    R = relatedness_for_graph(movie_kg, L)
    W = weight_kg_line_graph(L, R, floor=0.0)
    birth = movie_kg.triples.tolist().index([movie_kg.entity_id("MattDamon"), movie_kg.predicate_id("birthPlace"),
                                             movie_kg.entity_id("Cambridge")])
    country = movie_kg.triples.tolist().index([movie_kg.entity_id("Cambridge"), movie_kg.predicate_id("country"),
                                               movie_kg.entity_id("UnitedStates")])
    k = L.edges.tolist().index(sorted([birth, country]))
    expected = R[movie_kg.predicate_id("birthPlace"), movie_kg.predicate_id("country")]
    assert W.weights[k] == pytest.approx(expected)


def test_unrelated_predicates_are_floored():
    g = kg_from_rows([("a", "p", "b"), ("a", "q", "c")])
    L = build_triple_line_graph(g)
    R = np.eye(2)
    assert weight_kg_line_graph(L, R, floor=0.0).weights.tolist() == [0.0]
    assert weight_kg_line_graph(L, R, floor=1e-4).weights.tolist() == [1e-4]


def test_relatedness_matrix_must_cover_predicates(movie_kg):
    L = build_triple_line_graph(movie_kg)
    with pytest.raises(GraphError):
        weight_kg_line_graph(L, np.eye(2))


def test_uniform_and_floor():
    L = build_triple_line_graph(kg_from_rows([("a", "p", "b"), ("b", "q", "c"), ("a", "r", "c")]))
    assert weigh_uniform(L.with_weights([0.0, 0.5, 2.0])).weights.tolist() == [1.0, 1.0, 1.0]
    assert floor_weights(L.with_weights([0.0, 0.5, 2.0]), 0.1).weights.tolist() == [0.1, 0.5, 2.0]


# ---------------------------------------------------------------- current-flow betweenness

def pinv_oracle(g) -> np.ndarray:
    """Unit current between every pair, solved with a dense pseudo-inverse"""
    n = g.num_nodes
    A = g.adjacency.toarray()
    Lp = np.linalg.pinv(np.diag(A.sum(axis=1)) - A)
    throughput = np.zeros(n)
    for s, t in itertools.combinations(range(n), 2):
        potential = Lp[:, s] - Lp[:, t]
        for i, j in g.edges.tolist():
            current = abs(potential[i] - potential[j])
            throughput[i] += current / 2
            throughput[j] += current / 2
        throughput[s] -= 0.5
        throughput[t] -= 0.5
    return throughput / ((n - 1) * (n - 2) / 2)


def test_path_betweenness():
    cb = current_flow_betweenness(graph_from_edges([("a", "b"), ("b", "c")]))
    np.testing.assert_allclose(cb, [0.0, 1.0, 0.0], atol=1e-12)


def test_triangle_and_cycle_are_symmetric():
    triangle = current_flow_betweenness(graph_from_edges([("a", "b"), ("b", "c"), ("c", "a")]))
    assert np.ptp(triangle) < 1e-12
    cycle_graph = graph_from_edges([("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")])
    cycle = current_flow_betweenness(cycle_graph)
    assert np.ptp(cycle) < 1e-12
    np.testing.assert_allclose(cycle, pinv_oracle(cycle_graph), atol=1e-10)


def test_pseudoinverse_matches_numpy(karate_graph):
    A = karate_graph.adjacency.toarray()
    expected = np.linalg.pinv(np.diag(A.sum(axis=1)) - A)
    np.testing.assert_allclose(laplacian_pseudoinverse(karate_graph), expected, atol=1e-10)


@given(simple_graphs(max_nodes=25, connected=True, min_nodes=3))
@settings(max_examples=40)
def test_betweenness_matches_pseudoinverse_oracle(g):
    np.testing.assert_allclose(current_flow_betweenness(g), pinv_oracle(g), atol=1e-8)


@given(trees(max_nodes=30))
@settings(max_examples=40)
def test_tree_betweenness_equals_shortest_path_betweenness(g):
    graph = nx.Graph()
    graph.add_nodes_from(range(g.num_nodes))
    graph.add_edges_from(g.edges.tolist())
    expected = nx.betweenness_centrality(graph, normalized=True)
    np.testing.assert_allclose(current_flow_betweenness(g), [expected[v] for v in range(g.num_nodes)], atol=1e-8)


def test_betweenness_is_thread_independent(karate_graph):
    np.testing.assert_array_equal(current_flow_betweenness(karate_graph, threads=1),
                                  current_flow_betweenness(karate_graph, threads=4))


def test_betweenness_preconditions():
    with pytest.raises(GraphError, match="disconnected"):
        current_flow_betweenness(graph_from_edges([("a", "b"), ("b", "c"), ("x", "y")]))
    with pytest.raises(GraphError):
        current_flow_betweenness(graph_from_edges([("a", "b")]))
    with pytest.raises(GraphError):
        current_flow_betweenness(graph_from_edges([("a", "b"), ("b", "c"), ("c", "d")]), node_cap=3)


# ---------------------------------------------------------------- blended weights

def test_constant_centrality_gives_constant_weights(karate_graph):
    L = build_line_graph(karate_graph)
    W = weight_homogeneous_line_graph(L, np.full(karate_graph.num_nodes, 0.3), BlendCoefficients(), floor=0.0)
    np.testing.assert_allclose(W.weights, 0.3)


def test_path_blend():
    g = graph_from_edges([("a", "b"), ("b", "c")])
    L = build_line_graph(g)
    W = weight_homogeneous_line_graph(L, np.array([0.0, 1.0, 0.0]), BlendCoefficients(), floor=0.0)
    assert W.weights.tolist() == [0.5]


def test_alpha_only_picks_outer_endpoint_of_lower_line_node():
    g = graph_from_edges([("a", "b"), ("b", "c")])
    L = build_line_graph(g)
    cb = np.array([0.2, 0.7, 0.9])
    W = weight_homogeneous_line_graph(L, cb, BlendCoefficients(alpha=1.0, beta=0.0, gamma=0.0), floor=0.0)
    assert W.weights.tolist() == [0.2]
    W = weight_homogeneous_line_graph(L, cb, BlendCoefficients(alpha=0.0, beta=0.0, gamma=1.0), floor=0.0)
    assert W.weights.tolist() == [0.9]


def test_blend_rejects_coefficients_off_the_simplex(path_graph):
    L = build_line_graph(path_graph)
    off = BlendCoefficients.model_construct(alpha=0.5, beta=0.5, gamma=0.5)
    with pytest.raises(ConfigError):
        weight_homogeneous_line_graph(L, np.zeros(3), off)
    with pytest.raises(ValueError):
        BlendCoefficients(alpha=0.5, beta=0.5, gamma=0.5)


def test_blend_is_linear_in_centrality(karate_graph):
    L = build_line_graph(karate_graph)
    rng = np.random.default_rng(6)
    cb1, cb2 = rng.random(karate_graph.num_nodes), rng.random(karate_graph.num_nodes)
    coeff = BlendCoefficients(alpha=0.2, beta=0.5, gamma=0.3)
    w1 = weight_homogeneous_line_graph(L, cb1, coeff, floor=0.0).weights
    w2 = weight_homogeneous_line_graph(L, cb2, coeff, floor=0.0).weights
    mixed = weight_homogeneous_line_graph(L, 2.0 * cb1 + 0.5 * cb2, coeff, floor=0.0).weights
    np.testing.assert_allclose(mixed, 2.0 * w1 + 0.5 * w2, atol=1e-12)


def weights_by_edge(g, L):
    """Line edge weights keyed by the pair of source edges, as node-token sets"""
    ends = [frozenset((g.nodes[i], g.nodes[j])) for i, j in L.back_map.tolist()]
    return {frozenset((ends[a], ends[b])): w for (a, b), w in zip(L.edges.tolist(), L.weights.tolist())}


@given(simple_graphs(max_nodes=15, connected=True, min_nodes=3))
@settings(max_examples=40)
def test_blend_follows_node_relabeling(g):
    rows = [(g.nodes[i], g.nodes[j]) for i, j in g.edges.tolist()]
    # flipping each edge changes the interning order of nodes
    relabeled = graph_from_edges([(b, a) for a, b in rows])
    coeff = BlendCoefficients(alpha=0.1, beta=0.6, gamma=0.3)
    first = weights_by_edge(g, weight_homogeneous_line_graph(
        build_line_graph(g), current_flow_betweenness(g), coeff))
    second = weights_by_edge(relabeled, weight_homogeneous_line_graph(
        build_line_graph(relabeled), current_flow_betweenness(relabeled), coeff))
    assert first.keys() == second.keys()
    for key, value in first.items():
        assert second[key] == pytest.approx(value, abs=1e-9)
