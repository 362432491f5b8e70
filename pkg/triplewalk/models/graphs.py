"""
Graph models - interned knowledge graphs, homogeneous graphs and line graphs

All graphs are immutable once built; identifiers are dense 0-based integers
assigned in order of first appearance.
"""
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, List, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from triplewalk.errors import GraphError
from triplewalk.models.schemas import Direction, GraphKind

_ESCAPES = {"%": "%25", "|": "%7C", " ": "%20", "\t": "%09", "\n": "%0A", "\r": "%0D"}


def escape_token(text: str) -> str:
    """Percent-escape the characters that delimit embedding tokens"""
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def build_incidence(num_nodes: int, first: np.ndarray, second: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """CSR incidence (indptr, item ids) of items with endpoints first/second.

    An item whose endpoints coincide is listed once. Item ids within a row
    are sorted.
    """
    item_ids = np.arange(len(first), dtype=np.int64)
    distinct = first != second
    owners = np.concatenate([first, second[distinct]])
    items = np.concatenate([item_ids, item_ids[distinct]])
    order = np.lexsort((items, owners))
    counts = np.bincount(owners, minlength=num_nodes)
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, items[order]


@dataclass(frozen=True)
class KnowledgeGraph:
    """Directed labeled multigraph of (subject, predicate, object) triples"""

    entities: List[str]
    predicates: List[str]
    triples: np.ndarray
    incidence_ptr: np.ndarray = field(repr=False)
    incidence_idx: np.ndarray = field(repr=False)

    @classmethod
    def from_ids(cls, entities: List[str], predicates: List[str], triples: np.ndarray) -> "KnowledgeGraph":
        triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        indptr, idx = build_incidence(len(entities), triples[:, 0], triples[:, 2])
        return cls(list(entities), list(predicates), triples, indptr, idx)

    @property
    def num_entities(self) -> int:
        return len(self.entities)

    @property
    def num_predicates(self) -> int:
        return len(self.predicates)

    @property
    def num_triples(self) -> int:
        return int(self.triples.shape[0])

    @cached_property
    def entity_index(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.entities)}

    @cached_property
    def predicate_index(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.predicates)}

    def entity_id(self, token: str) -> int:
        try:
            return self.entity_index[token]
        except KeyError:
            raise GraphError(f"Unknown entity: {token}") from None

    def predicate_id(self, token: str) -> int:
        try:
            return self.predicate_index[token]
        except KeyError:
            raise GraphError(f"Unknown predicate: {token}") from None

    def incidence_array(self, v: int) -> np.ndarray:
        if not 0 <= v < self.num_entities:
            raise GraphError(f"Invalid entity id {v} (graph has {self.num_entities} entities)")
        return self.incidence_idx[self.incidence_ptr[v]:self.incidence_ptr[v + 1]]

    def incidence(self, v: int) -> List[int]:
        """Sorted triple ids in which v is subject or object"""
        return self.incidence_array(v).tolist()

    @property
    def incidence_sizes(self) -> np.ndarray:
        return np.diff(self.incidence_ptr)

    def triple_token(self, t: int) -> str:
        s, p, o = self.triples[t]
        return "|".join(escape_token(x) for x in (self.entities[s], self.predicates[p], self.entities[o]))


@dataclass(frozen=True)
class HomogeneousGraph:
    """Undirected simple graph"""

    nodes: List[str]
    edges: np.ndarray
    incidence_ptr: np.ndarray = field(repr=False)
    incidence_idx: np.ndarray = field(repr=False)

    @classmethod
    def from_ids(cls, nodes: List[str], edges: np.ndarray) -> "HomogeneousGraph":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if np.any(edges[:, 0] == edges[:, 1]):
            raise GraphError("Self-loops are not allowed in homogeneous graphs")
        indptr, idx = build_incidence(len(nodes), edges[:, 0], edges[:, 1])
        return cls(list(nodes), edges, indptr, idx)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def node_index(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.nodes)}

    def node_id(self, token: str) -> int:
        try:
            return self.node_index[token]
        except KeyError:
            raise GraphError(f"Unknown node: {token}") from None

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.incidence_ptr)

    def incident_edges(self, v: int) -> np.ndarray:
        if not 0 <= v < self.num_nodes:
            raise GraphError(f"Invalid node id {v} (graph has {self.num_nodes} nodes)")
        return self.incidence_idx[self.incidence_ptr[v]:self.incidence_ptr[v + 1]]

    def neighbors(self, v: int) -> np.ndarray:
        ends = self.edges[self.incident_edges(v)]
        return np.sort(np.where(ends[:, 0] == v, ends[:, 1], ends[:, 0]))

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        n = self.num_nodes
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))

    def edge_token(self, e: int) -> str:
        i, j = self.edges[e]
        return f"{escape_token(self.nodes[i])}|{escape_token(self.nodes[j])}"


@dataclass(frozen=True)
class TripleLineGraph:
    """Weighted undirected graph over the triples (or edges) of a source graph.

    back_map has one row per line node: (s, p, o) ids for knowledge graphs,
    (i, j) node ids for homogeneous graphs.
    """

    kind: GraphKind
    node_count: int
    edges: np.ndarray
    weights: np.ndarray
    back_map: np.ndarray = field(repr=False)

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def with_weights(self, weights: np.ndarray) -> "TripleLineGraph":
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (self.num_edges,):
            raise GraphError(f"Expected {self.num_edges} weights, got {weights.shape}")
        return replace(self, weights=weights)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric weighted adjacency with sorted column indices"""
        n = self.node_count
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        data = np.concatenate([self.weights, self.weights])
        adj = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        adj.sort_indices()
        return adj

    def neighbors(self, node: int) -> np.ndarray:
        adj = self.adjacency
        return adj.indices[adj.indptr[node]:adj.indptr[node + 1]]

    def edge_set(self) -> set:
        return {(int(a), int(b)) for a, b in self.edges}

    def is_connected(self) -> bool:
        if self.node_count <= 1:
            return True
        count, _ = connected_components(self.adjacency, directed=False)
        return count == 1


@dataclass(frozen=True)
class PropagationRule:
    """Copy labels along triples of one predicate in one direction"""

    predicate: int
    direction: Direction


@dataclass(frozen=True)
class LabeledDataset:
    """Line-node ids with dense class ids; classes[c] is the label-set signature of class c"""

    nodes: np.ndarray
    labels: np.ndarray
    classes: List[str]

    def __post_init__(self):
        if len(self.nodes) != len(self.labels):
            raise GraphError("nodes and labels must have equal length")
        if len(np.unique(self.nodes)) != len(self.nodes):
            raise GraphError("a line node may be labeled at most once")

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)