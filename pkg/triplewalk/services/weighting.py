"""
Weighting Service - Predicate relatedness and current-flow betweenness edge weights
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
from loguru import logger
from scipy import linalg
from scipy.sparse.csgraph import connected_components, laplacian
from sklearn.metrics.pairwise import cosine_similarity

from triplewalk.config import settings
from triplewalk.errors import ConfigError, GraphError
from triplewalk.models.graphs import HomogeneousGraph, KnowledgeGraph, TripleLineGraph
from triplewalk.models.schemas import SIMPLEX_TOLERANCE, BlendCoefficients, GraphKind
from triplewalk.services.line_graph import build_triple_line_graph

# Elements of the (edges x nodes) difference block sorted per chunk
_CHUNK_ELEMENTS = 4_000_000


def predicate_counts(g: KnowledgeGraph) -> np.ndarray:
    """Number of triples using each predicate"""
    return np.bincount(g.triples[:, 1], minlength=g.num_predicates)


def predicate_cooccurrence(g: KnowledgeGraph, L: Optional[TripleLineGraph] = None) -> np.ndarray:
    """Symmetric counts of adjacent triple pairs per predicate pair"""
    if L is None:
        L = build_triple_line_graph(g)
    P = g.num_predicates
    pa = g.triples[L.edges[:, 0], 1]
    pb = g.triples[L.edges[:, 1], 1]
    counts = np.zeros((P, P), dtype=np.float64)
    np.add.at(counts, (pa, pb), 1.0)
    counts = counts + counts.T
    counts[np.diag_indices(P)] /= 2.0
    return counts


def predicate_relatedness(C: np.ndarray, frequencies: Optional[np.ndarray] = None) -> np.ndarray:
    """Cosine between popularity-weighted co-occurrence rows.

    Column j is scaled by log(1 + |T| / (1 + freq(p_j))) when predicate
    frequencies are given. The diagonal is 1 for every predicate.
    """
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise GraphError(f"Co-occurrence matrix must be square, got shape {C.shape}")
    if np.any(C < 0):
        raise GraphError("Co-occurrence counts must be non-negative")
    if frequencies is not None:
        frequencies = np.asarray(frequencies, dtype=np.float64)
        if frequencies.shape != (C.shape[0],):
            raise GraphError(f"Expected {C.shape[0]} predicate frequencies, got {frequencies.shape}")
        idf = np.log1p(frequencies.sum() / (1.0 + frequencies))
        C = C * idf[np.newaxis, :]

    R = cosine_similarity(C)
    R = np.clip((R + R.T) / 2.0, 0.0, 1.0)
    np.fill_diagonal(R, 1.0)
    return R


def relatedness_for_graph(g: KnowledgeGraph, L: Optional[TripleLineGraph] = None) -> np.ndarray:
    return predicate_relatedness(predicate_cooccurrence(g, L), predicate_counts(g))


def floor_weights(L: TripleLineGraph, eps: Optional[float] = None) -> TripleLineGraph:
    """Raise weights below eps to eps so every line edge stays walkable"""
    eps = settings.weight_floor if eps is None else eps
    low = L.weights < eps
    if np.any(low):
        logger.debug(f"Floored {int(low.sum())} of {L.num_edges} edge weights to {eps}")
        return L.with_weights(np.maximum(L.weights, eps))
    return L


def weigh_uniform(L: TripleLineGraph) -> TripleLineGraph:
    return L.with_weights(np.ones(L.num_edges))


def weight_kg_line_graph(L: TripleLineGraph, R: np.ndarray, floor: Optional[float] = None) -> TripleLineGraph:
    """Weight of edge (t, t') is the predicate relatedness R[p_t, p_t'], floored to the walk epsilon"""
    if L.kind != GraphKind.KG:
        raise GraphError("Relatedness weights need a triple line graph built from a knowledge graph")
    predicates = L.back_map[:, 1]
    if predicates.size and predicates.max() >= R.shape[0]:
        raise GraphError(f"Relatedness matrix covers {R.shape[0]} predicates, "
                         f"line graph uses predicate id {int(predicates.max())}")
    raw = R[predicates[L.edges[:, 0]], predicates[L.edges[:, 1]]]
    return floor_weights(L.with_weights(raw), floor)


def _connected_or_raise(g: HomogeneousGraph) -> None:
    count, labels = connected_components(g.adjacency, directed=False)
    if count == 1:
        return
    sizes = np.bincount(labels)
    stray = int(np.argmin(sizes))
    member = int(np.flatnonzero(labels == stray)[0])
    raise GraphError(
        f"Graph is disconnected ({count} components): component containing node "
        f"'{g.nodes[member]}' ({int(sizes[stray])} nodes) is unreachable from the rest"
    )


def laplacian_pseudoinverse(g: HomogeneousGraph) -> np.ndarray:
    """Moore-Penrose inverse of the Laplacian of a connected graph"""
    n = g.num_nodes
    lap = laplacian(g.adjacency.astype(np.float64)).toarray()
    shifted = lap + 1.0 / n
    factor = linalg.cho_factor(shifted)
    return linalg.cho_solve(factor, np.eye(n)) - 1.0 / n


def _pair_sums(block: np.ndarray) -> np.ndarray:
    """Row-wise sum over i < j of |x_i - x_j|"""
    n = block.shape[1]
    block = np.sort(block, axis=1)
    coefficients = 2.0 * np.arange(n) - (n - 1)
    return block @ coefficients


def current_flow_betweenness(g: HomogeneousGraph, node_cap: Optional[int] = None,
                             threads: int = 1) -> np.ndarray:
    """Exact current-flow betweenness normalized by (n-1)(n-2)/2 pairs"""
    n = g.num_nodes
    cap = settings.cfb_node_cap if node_cap is None else node_cap
    if n < 3:
        raise GraphError(f"Current-flow betweenness needs at least 3 nodes, got {n}")
    if n > cap:
        raise GraphError(f"Graph has {n} nodes, above the exact current-flow cap of {cap}")
    _connected_or_raise(g)

    pinv = laplacian_pseudoinverse(g)
    u, v = g.edges[:, 0], g.edges[:, 1]
    step = max(1, _CHUNK_ELEMENTS // n)
    chunks = [slice(start, start + step) for start in range(0, g.num_edges, step)]

    def edge_throughput(chunk: slice) -> np.ndarray:
        return _pair_sums(pinv[u[chunk]] - pinv[v[chunk]])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_edge = np.concatenate(list(pool.map(edge_throughput, chunks)))
    else:
        per_edge = np.concatenate([edge_throughput(chunk) for chunk in chunks])

    throughput = np.zeros(n)
    np.add.at(throughput, u, per_edge / 2.0)
    np.add.at(throughput, v, per_edge / 2.0)
    # each node sends or receives unit current for its own n - 1 pairs
    throughput -= (n - 1) / 2.0
    cb = throughput / ((n - 1) * (n - 2) / 2.0)
    cb = np.clip(cb, 0.0, 1.0)
    logger.info(f"Current-flow betweenness over {n} nodes: max {cb.max():.4f}, mean {cb.mean():.4f}")
    return cb


def weight_homogeneous_line_graph(L: TripleLineGraph, cb: np.ndarray, coeff: BlendCoefficients,
                                  floor: Optional[float] = None) -> TripleLineGraph:
    """w = alpha*cb(i) + beta*cb(j) + gamma*cb(k) where j is the shared endpoint.

    i is the outer endpoint of the lower-numbered line node of the edge.
    """
    if L.kind != GraphKind.HOMOGENEOUS:
        raise GraphError("Centrality weights need a line graph built from a homogeneous graph")
    total = coeff.alpha + coeff.beta + coeff.gamma
    if min(coeff.alpha, coeff.beta, coeff.gamma) < 0 or abs(total - 1.0) > SIMPLEX_TOLERANCE:
        raise ConfigError(f"Blend coefficients must lie on the simplex, got {coeff}")
    cb = np.asarray(cb, dtype=np.float64)

    first = L.back_map[L.edges[:, 0]]
    second = L.back_map[L.edges[:, 1]]
    first_shared = (first[:, 0] == second[:, 0]) | (first[:, 0] == second[:, 1])
    j = np.where(first_shared, first[:, 0], first[:, 1])
    i = np.where(first_shared, first[:, 1], first[:, 0])
    k = second[:, 0] + second[:, 1] - j

    raw = coeff.alpha * cb[i] + coeff.beta * cb[j] + coeff.gamma * cb[k]
    return floor_weights(L.with_weights(raw), floor)
