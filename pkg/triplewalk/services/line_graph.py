"""
Line Graph Service - Builds triple line graphs of knowledge graphs and line graphs of simple graphs
"""
from typing import Dict, List, Optional, Union

import numpy as np
from loguru import logger

from triplewalk.config import settings
from triplewalk.errors import GraphError
from triplewalk.models.graphs import HomogeneousGraph, KnowledgeGraph, TripleLineGraph
from triplewalk.models.schemas import GraphKind


def _pairs_from_incidence(indptr: np.ndarray, items: np.ndarray, num_items: int,
                          hub_threshold: Optional[int]) -> np.ndarray:
    """Deduplicated (a, b) item pairs, a < b, sharing at least one owner"""
    sizes = np.diff(indptr)
    triu_cache: Dict[int, tuple] = {}
    chunks: List[np.ndarray] = []

    for owner in np.flatnonzero(sizes >= 2):
        k = int(sizes[owner])
        if hub_threshold is not None and k > hub_threshold:
            logger.warning(f"Hub node {owner} appears in {k} items and contributes {k * (k - 1) // 2} pairs")
        if k not in triu_cache:
            triu_cache[k] = np.triu_indices(k, 1)
        first, second = triu_cache[k]
        row = items[indptr[owner]:indptr[owner + 1]]
        chunks.append(row[first] * num_items + row[second])

    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    keys = np.unique(np.concatenate(chunks))
    return np.stack([keys // num_items, keys % num_items], axis=1)


def build_triple_line_graph(g: KnowledgeGraph, hub_threshold: Optional[int] = None) -> TripleLineGraph:
    """One node per triple; two triples are adjacent iff they share an endpoint"""
    if g.num_triples == 0:
        raise GraphError("Cannot build the triple line graph of an empty knowledge graph")
    threshold = hub_threshold if hub_threshold is not None else settings.hub_threshold
    edges = _pairs_from_incidence(g.incidence_ptr, g.incidence_idx, g.num_triples, threshold)
    logger.info(f"Triple line graph: {g.num_triples} nodes, {len(edges)} edges "
                f"(bound {line_edge_count_bound(g)})")
    return TripleLineGraph(
        kind=GraphKind.KG,
        node_count=g.num_triples,
        edges=edges,
        weights=np.ones(len(edges), dtype=np.float64),
        back_map=g.triples.copy(),
    )


def build_line_graph(g: HomogeneousGraph, hub_threshold: Optional[int] = None) -> TripleLineGraph:
    """Undirected line graph; each line node maps back to its source edge"""
    if g.num_edges == 0:
        raise GraphError("Cannot build the line graph of a graph without edges")
    threshold = hub_threshold if hub_threshold is not None else settings.hub_threshold
    edges = _pairs_from_incidence(g.incidence_ptr, g.incidence_idx, g.num_edges, threshold)
    logger.info(f"Line graph: {g.num_edges} nodes, {len(edges)} edges")
    return TripleLineGraph(
        kind=GraphKind.HOMOGENEOUS,
        node_count=g.num_edges,
        edges=edges,
        weights=np.ones(len(edges), dtype=np.float64),
        back_map=g.edges.copy(),
    )


def build(g: Union[KnowledgeGraph, HomogeneousGraph]) -> TripleLineGraph:
    if isinstance(g, KnowledgeGraph):
        return build_triple_line_graph(g)
    return build_line_graph(g)


def line_edge_count_bound(g: KnowledgeGraph) -> int:
    """Sum over entities of C(k_v, 2); equals the line edge count when no two triples share both endpoints"""
    k = g.incidence_sizes.astype(np.int64)
    return int(np.sum(k * (k - 1) // 2))


def line_graph_node_tokens(g: Union[KnowledgeGraph, HomogeneousGraph]) -> List[str]:
    """Embedding tokens per line node: `s|p|o` for triples, `i|j` for edges"""
    if isinstance(g, KnowledgeGraph):
        return [g.triple_token(t) for t in range(g.num_triples)]
    return [g.edge_token(e) for e in range(g.num_edges)]
