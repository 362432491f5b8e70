"""
Graph Parsing Service - Reads, interns and writes knowledge graphs and edge lists
"""
import io
from pathlib import Path
from typing import BinaryIO, Dict, Iterable, Iterator, List, Set, Tuple, Union

import numpy as np
from loguru import logger

from triplewalk.errors import GraphError, ParseError
from triplewalk.models.graphs import HomogeneousGraph, KnowledgeGraph, PropagationRule
from triplewalk.models.schemas import Direction, GraphKind

Source = Union[bytes, BinaryIO, Iterable[bytes]]


def _numbered_lines(source: Source) -> Iterator[Tuple[int, str]]:
    """Yield (line number, text) for non-empty, non-comment UTF-8 lines"""
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    for number, raw in enumerate(source, start=1):
        try:
            line = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
        except UnicodeDecodeError as e:
            raise ParseError(f"invalid UTF-8 ({e.reason})", number) from None
        line = line.rstrip("\r\n")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield number, line


def _intern(table: Dict[str, int], token: str) -> int:
    return table.setdefault(token, len(table))


def parse_triples(source: Source) -> KnowledgeGraph:
    """Parse `subject\\tpredicate\\tobject` lines into an interned knowledge graph"""
    entities: Dict[str, int] = {}
    predicates: Dict[str, int] = {}
    seen: Set[Tuple[int, int, int]] = set()
    triples: List[Tuple[int, int, int]] = []
    duplicates = 0

    for number, line in _numbered_lines(source):
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(f"expected 3 tab-separated fields, found {len(fields)}", number)
        if not all(fields):
            raise ParseError("empty field", number)
        s, p, o = fields
        triple = (_intern(entities, s), _intern(predicates, p), _intern(entities, o))
        if triple in seen:
            duplicates += 1
            continue
        seen.add(triple)
        triples.append(triple)

    if not triples:
        raise ParseError("input contains no triples")
    if duplicates:
        logger.debug(f"Collapsed {duplicates} duplicate triples")

    g = KnowledgeGraph.from_ids(list(entities), list(predicates), np.array(triples, dtype=np.int64))
    logger.info(f"Parsed knowledge graph: {g.num_entities} entities, {g.num_predicates} predicates, {g.num_triples} triples")
    return g


def parse_edge_list(source: Source) -> HomogeneousGraph:
    """Parse whitespace-separated `i j` lines into an undirected simple graph"""
    nodes: Dict[str, int] = {}
    seen: Set[Tuple[int, int]] = set()
    edges: List[Tuple[int, int]] = []

    for number, line in _numbered_lines(source):
        fields = line.split()
        if len(fields) != 2:
            raise ParseError(f"expected 2 whitespace-separated fields, found {len(fields)}", number)
        a, b = fields
        if a == b:
            raise ParseError(f"self-loop on node {a}", number)
        i, j = _intern(nodes, a), _intern(nodes, b)
        key = (min(i, j), max(i, j))
        if key in seen:
            continue
        seen.add(key)
        edges.append((i, j))

    if not edges:
        raise ParseError("input contains no edges")

    g = HomogeneousGraph.from_ids(list(nodes), np.array(edges, dtype=np.int64))
    logger.info(f"Parsed homogeneous graph: {g.num_nodes} nodes, {g.num_edges} edges")
    return g


def incidence(g: KnowledgeGraph, v: int) -> List[int]:
    """Sorted, duplicate-free triple ids in which entity v appears"""
    return g.incidence(v)


def serialize_triples(g: KnowledgeGraph) -> bytes:
    lines = [
        f"{g.entities[s]}\t{g.predicates[p]}\t{g.entities[o]}\n"
        for s, p, o in g.triples.tolist()
    ]
    return "".join(lines).encode("utf-8")


def serialize_edge_list(g: HomogeneousGraph) -> bytes:
    return "".join(f"{g.nodes[i]} {g.nodes[j]}\n" for i, j in g.edges.tolist()).encode("utf-8")


def load_graph(path: Path, kind: GraphKind) -> Union[KnowledgeGraph, HomogeneousGraph]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Input graph not found: {path}")
    with path.open("rb") as f:
        if kind == GraphKind.KG:
            return parse_triples(f)
        return parse_edge_list(f)


def parse_labels(source: Source) -> Dict[str, Set[str]]:
    """Read `nodeToken\\tlabel` lines; repeated tokens accumulate labels"""
    labels: Dict[str, Set[str]] = {}
    for number, line in _numbered_lines(source):
        fields = line.split("\t")
        if len(fields) != 2 or not all(fields):
            raise ParseError("expected `node<TAB>label`", number)
        labels.setdefault(fields[0], set()).add(fields[1])
    return labels


def parse_rules(source: Source, g: KnowledgeGraph) -> List[PropagationRule]:
    """Read `predicate\\tdirection` lines (direction s2o or o2s) in application order"""
    rules: List[PropagationRule] = []
    for number, line in _numbered_lines(source):
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError("expected `predicate<TAB>direction`", number)
        predicate, direction = fields
        try:
            parsed = Direction(direction.strip())
        except ValueError:
            raise ParseError(f"unknown direction '{direction}' (use s2o or o2s)", number) from None
        if predicate not in g.predicate_index:
            raise GraphError(f"line {number}: rule predicate '{predicate}' does not occur in the graph")
        rules.append(PropagationRule(g.predicate_id(predicate), parsed))
    return rules
