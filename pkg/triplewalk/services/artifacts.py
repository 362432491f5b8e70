"""
Artifact Service - Plain-text files exchanged between pipeline stages
"""
from pathlib import Path
from typing import Dict, Iterable, List, Union

import numpy as np

from triplewalk.errors import ParseError
from triplewalk.models.graphs import HomogeneousGraph, KnowledgeGraph, TripleLineGraph
from triplewalk.models.schemas import GraphKind
from triplewalk.services.evaluation import MetricRow
from triplewalk.services.walks import WalkCorpus

LINE_GRAPH_FILE = "line_graph.tsv"
LINE_NODES_FILE = "line_nodes.tsv"
WEIGHTED_LINE_GRAPH_FILE = "weighted_line_graph.tsv"
RELATEDNESS_FILE = "relatedness.tsv"
CENTRALITY_FILE = "centrality.tsv"
WALKS_FILE = "walks.txt"
EMBEDDINGS_FILE = "embeddings.txt"
METRICS_FILE = "metrics.tsv"

METRICS_HEADER = "task\tdataset\ttrain_fraction\tmetric\tvalue"

SourceGraph = Union[KnowledgeGraph, HomogeneousGraph]


def _float(x: float) -> str:
    return f"{x:.17g}"


def write_line_graph(L: TripleLineGraph, path: Path) -> None:
    """`# line-graph kind=.. nodes=.. edges=..` header, then `tA tB weight` rows"""
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write(f"# line-graph kind={L.kind.value} nodes={L.node_count} edges={L.num_edges}\n")
        for (a, b), w in zip(L.edges.tolist(), L.weights.tolist()):
            f.write(f"{a} {b} {_float(w)}\n")


def write_line_nodes(L: TripleLineGraph, g: SourceGraph, path: Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        if isinstance(g, KnowledgeGraph):
            for node, (s, p, o) in enumerate(L.back_map.tolist()):
                f.write(f"{node}\t{g.entities[s]}\t{g.predicates[p]}\t{g.entities[o]}\n")
        else:
            for node, (i, j) in enumerate(L.back_map.tolist()):
                f.write(f"{node}\t{g.nodes[i]}\t{g.nodes[j]}\n")


def _parse_header(line: str) -> Dict[str, str]:
    parts = line.split()
    if len(parts) < 2 or parts[0] != "#" or parts[1] != "line-graph":
        raise ParseError("missing `# line-graph` header", 1)
    fields = dict(p.split("=", 1) for p in parts[2:] if "=" in p)
    for key in ("kind", "nodes", "edges"):
        if key not in fields:
            raise ParseError(f"header lacks `{key}=`", 1)
    return fields


def read_line_graph(path: Path, g: SourceGraph) -> TripleLineGraph:
    """Read a line graph artifact and attach the back map of its source graph"""
    kind = GraphKind.KG if isinstance(g, KnowledgeGraph) else GraphKind.HOMOGENEOUS
    back_map = g.triples if isinstance(g, KnowledgeGraph) else g.edges
    with Path(path).open("r", encoding="utf-8") as f:
        header = _parse_header(f.readline())
        if header["kind"] != kind.value:
            raise ParseError(f"line graph was built from a {header['kind']} input, not {kind.value}", 1)
        nodes, expected = int(header["nodes"]), int(header["edges"])
        if nodes != len(back_map):
            raise ParseError(f"line graph has {nodes} nodes but the input graph has {len(back_map)} items", 1)

        edges = np.empty((expected, 2), dtype=np.int64)
        weights = np.empty(expected, dtype=np.float64)
        count = 0
        for number, line in enumerate(f, start=2):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 3 or count >= expected:
                raise ParseError("expected `tA tB weight` rows matching the header", number)
            try:
                a, b, w = int(fields[0]), int(fields[1]), float(fields[2])
            except ValueError:
                raise ParseError("non-numeric field", number) from None
            if not (0 <= a < b < nodes) or w < 0:
                raise ParseError(f"invalid edge {a} {b} {w}", number)
            edges[count], weights[count] = (a, b), w
            count += 1
    if count != expected:
        raise ParseError(f"header announces {expected} edges, found {count}")
    return TripleLineGraph(kind, nodes, edges, weights, back_map.copy())


def write_corpus(corpus: WalkCorpus, path: Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        for walk in corpus:
            f.write(" ".join(map(str, walk.tolist())) + "\n")


def read_corpus(path: Path, node_count: int) -> WalkCorpus:
    walks: List[List[int]] = []
    with Path(path).open("r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                walk = [int(x) for x in line.split()]
            except ValueError:
                raise ParseError("walk tokens must be integers", number) from None
            if min(walk) < 0 or max(walk) >= node_count:
                raise ParseError(f"walk token outside [0, {node_count})", number)
            walks.append(walk)
    if not walks:
        raise ParseError("walk corpus is empty")
    return WalkCorpus.from_walks(walks, node_count)


def write_relatedness(R: np.ndarray, g: KnowledgeGraph, path: Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        for i in range(R.shape[0]):
            for j in range(i, R.shape[0]):
                f.write(f"{g.predicates[i]}\t{g.predicates[j]}\t{_float(R[i, j])}\n")


def write_centrality(cb: np.ndarray, g: HomogeneousGraph, path: Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        for node, value in zip(g.nodes, cb.tolist()):
            f.write(f"{node}\t{_float(value)}\n")


def write_metrics(rows: Iterable[MetricRow], path: Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write(METRICS_HEADER + "\n")
        for row in rows:
            fraction = "-" if row.train_fraction is None else f"{row.train_fraction:g}"
            f.write(f"{row.task}\t{row.dataset}\t{fraction}\t{row.metric}\t{row.value:.6f}\n")


def read_metrics(path: Path) -> List[MetricRow]:
    rows: List[MetricRow] = []
    with Path(path).open("r", encoding="utf-8") as f:
        if f.readline().rstrip("\n") != METRICS_HEADER:
            raise ParseError("unexpected metrics header", 1)
        for number, line in enumerate(f, start=2):
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 5:
                raise ParseError("expected 5 tab-separated fields", number)
            task, dataset, fraction, metric, value = fields
            rows.append(MetricRow(task, dataset, None if fraction == "-" else float(fraction), metric, float(value)))
    return rows


def write_curves(rows: Iterable[MetricRow], out_dir: Path) -> List[Path]:
    """One `<dataset>_<metric>.dat` per classification metric: `train_percent value` columns"""
    curves: Dict[str, List[MetricRow]] = {}
    for row in rows:
        if row.train_fraction is not None:
            curves.setdefault(f"{row.dataset}_{row.metric}.dat", []).append(row)
    written = []
    for name, points in curves.items():
        path = Path(out_dir) / name
        with path.open("w", encoding="utf-8", newline="\n") as f:
            for row in sorted(points, key=lambda r: r.train_fraction):
                f.write(f"{row.train_fraction * 100:g} {row.value:.6f}\n")
        written.append(path)
    return written
