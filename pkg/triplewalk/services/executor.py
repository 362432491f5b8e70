"""
Stage Executor Service - Runs one pipeline stage and records its execution
"""
import time
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Set, Union

import psutil
from loguru import logger

from triplewalk.errors import ConfigError, MissingArtifactError, StageError
from triplewalk.models.graphs import HomogeneousGraph, KnowledgeGraph, LabeledDataset
from triplewalk.models.schemas import (
    EvalTask, PipelineConfig, Stage, StageResult, StageStatus, WeightingKind,
)
from triplewalk.services import artifacts, evaluation, line_graph, parsing, skipgram, walks, weighting
from triplewalk.services.evaluation import MetricRow

SourceGraph = Union[KnowledgeGraph, HomogeneousGraph]

# artifact each stage produces
STAGE_ARTIFACTS: Dict[Stage, str] = {
    Stage.BUILD_LINE_GRAPH: artifacts.LINE_GRAPH_FILE,
    Stage.WEIGH: artifacts.WEIGHTED_LINE_GRAPH_FILE,
    Stage.WALK: artifacts.WALKS_FILE,
    Stage.EMBED: artifacts.EMBEDDINGS_FILE,
    Stage.EVALUATE: artifacts.METRICS_FILE,
}

EMBED_TASK = "embed"
EMBED_METRIC = "mean_objective"


def _rss_mb() -> float:
    return psutil.Process().memory_info().rss / (1024 * 1024)


class StageExecutor:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out_dir = Path(cfg.out)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._graph: Optional[SourceGraph] = None

    @property
    def graph(self) -> SourceGraph:
        """Input graph, parsed on first use"""
        if self._graph is None:
            self._graph = parsing.load_graph(self.cfg.input, self.cfg.kind)
        return self._graph

    def artifact(self, name: str) -> Path:
        return self.out_dir / name

    def is_complete(self, stage: Stage) -> bool:
        """Whether the artifact of a stage is already on disk"""
        path = self.artifact(STAGE_ARTIFACTS[stage])
        if not path.is_file():
            return False
        if stage == Stage.EVALUATE:
            # embed writes the metrics file too
            return any(r.task != EMBED_TASK for r in artifacts.read_metrics(path))
        return True

    def require(self, name: str, producer: Stage) -> Path:
        path = self.artifact(name)
        if not path.is_file():
            raise MissingArtifactError(str(path), producer.value)
        return path

    def execute(self, stage: Stage) -> StageResult:
        """Execute a stage and return its execution record"""
        start_time = time.time()
        logger.info(f"Stage '{stage.value}' started")

        try:
            if stage == Stage.BUILD_LINE_GRAPH:
                written = self._build_line_graph()
            elif stage == Stage.WEIGH:
                written = self._weigh()
            elif stage == Stage.WALK:
                written = self._walk()
            elif stage == Stage.EMBED:
                written = self._embed()
            elif stage == Stage.EVALUATE:
                written = self._evaluate()
            else:
                raise ValueError(f"Unknown stage: {stage}")
        except Exception as e:
            result = StageResult(
                stage=stage,
                status=StageStatus.FAILED,
                duration_ms=int((time.time() - start_time) * 1000),
                rss_mb=_rss_mb(),
                error_message=str(e),
            )
            self._log_execution(result)
            if isinstance(e, ConfigError):
                raise
            raise StageError(stage.value, str(e)) from e

        result = StageResult(
            stage=stage,
            status=StageStatus.SUCCESS,
            duration_ms=int((time.time() - start_time) * 1000),
            rss_mb=_rss_mb(),
            artifacts=[p.name for p in written],
        )
        self._log_execution(result)
        return result

    def _build_line_graph(self) -> List[Path]:
        g = self.graph
        L = line_graph.build(g)
        if not L.is_connected():
            logger.warning("Line graph is disconnected; walks stay inside their component")
        graph_path = self.artifact(artifacts.LINE_GRAPH_FILE)
        nodes_path = self.artifact(artifacts.LINE_NODES_FILE)
        artifacts.write_line_graph(L, graph_path)
        artifacts.write_line_nodes(L, g, nodes_path)
        return [graph_path, nodes_path]

    def _weigh(self) -> List[Path]:
        g = self.graph
        L = artifacts.read_line_graph(self.require(artifacts.LINE_GRAPH_FILE, Stage.BUILD_LINE_GRAPH), g)
        written: List[Path] = []

        if self.cfg.weighting == WeightingKind.UNIFORM:
            L = weighting.weigh_uniform(L)
        elif self.cfg.weighting == WeightingKind.RELATEDNESS:
            R = weighting.relatedness_for_graph(g, L)
            path = self.artifact(artifacts.RELATEDNESS_FILE)
            artifacts.write_relatedness(R, g, path)
            written.append(path)
            L = weighting.weight_kg_line_graph(L, R)
        else:
            cb = weighting.current_flow_betweenness(g, threads=self.cfg.threads)
            path = self.artifact(artifacts.CENTRALITY_FILE)
            artifacts.write_centrality(cb, g, path)
            written.append(path)
            L = weighting.weight_homogeneous_line_graph(L, cb, self.cfg.blend)

        out = self.artifact(artifacts.WEIGHTED_LINE_GRAPH_FILE)
        artifacts.write_line_graph(L, out)
        return written + [out]

    def _walk(self) -> List[Path]:
        L = artifacts.read_line_graph(self.require(artifacts.WEIGHTED_LINE_GRAPH_FILE, Stage.WEIGH), self.graph)
        corpus = walks.generate_walks(L, self.cfg.walk, threads=self.cfg.threads)
        path = self.artifact(artifacts.WALKS_FILE)
        artifacts.write_corpus(corpus, path)
        return [path]

    def _node_count(self) -> int:
        g = self.graph
        return g.num_triples if isinstance(g, KnowledgeGraph) else g.num_edges

    def _embed(self) -> List[Path]:
        corpus = artifacts.read_corpus(self.require(artifacts.WALKS_FILE, Stage.WALK), self._node_count())
        E = skipgram.train(corpus, self.cfg.train.resolved(self.cfg.kind))
        embeddings_path = self.artifact(artifacts.EMBEDDINGS_FILE)
        skipgram.save_embeddings(E, line_graph.line_graph_node_tokens(self.graph), embeddings_path)

        metrics_path = self.artifact(artifacts.METRICS_FILE)
        row = MetricRow(EMBED_TASK, self.cfg.dataset_name, None, EMBED_METRIC, E.history[-1])
        artifacts.write_metrics([row], metrics_path)
        return [embeddings_path, metrics_path]

    def _read_labels(self, path: Path) -> Dict[str, Set[str]]:
        with Path(path).open("rb") as f:
            return parsing.parse_labels(f)

    def _labeled_dataset(self, tokens: List[str]) -> Optional[LabeledDataset]:
        """Line-node labels: direct per-token labels, else derived from the input graph"""
        token_labels = self._read_labels(self.cfg.labels) if self.cfg.labels else {}
        if token_labels and any(t in token_labels for t in tokens):
            logger.info("Labels name line nodes directly")
            return evaluation.label_tokens(tokens, token_labels)

        g = self.graph
        if isinstance(g, KnowledgeGraph):
            if not token_labels:
                logger.warning("No --labels for a knowledge graph input; nothing to evaluate")
                return None
            rules = []
            if self.cfg.rules:
                with Path(self.cfg.rules).open("rb") as f:
                    rules = parsing.parse_rules(f, g)
            entity_labels = evaluation.propagate_labels(g, evaluation.seed_labels_from_tokens(g, token_labels), rules)
            return evaluation.label_triples(g, entity_labels)

        if token_labels:
            node_labels = {g.node_index[t]: ls for t, ls in token_labels.items() if t in g.node_index}
            return evaluation.label_edges(g, node_labels)
        return evaluation.label_edges_by_community(g, evaluation.detect_communities(g))

    def _evaluate(self) -> List[Path]:
        E = skipgram.load_embeddings(self.require(artifacts.EMBEDDINGS_FILE, Stage.EMBED))
        metrics_path = self.artifact(artifacts.METRICS_FILE)
        rows: List[MetricRow] = []
        if metrics_path.is_file():
            rows = [r for r in artifacts.read_metrics(metrics_path) if r.task == EMBED_TASK]

        task = self.cfg.task
        dataset = self._labeled_dataset(E.tokens) if task != EvalTask.NONE else None
        if dataset is not None and dataset.num_classes < 2:
            logger.warning(f"Only {dataset.num_classes} label class(es); skipping evaluation")
            dataset = None

        written = [metrics_path]
        if dataset is not None:
            X = E.vectors[dataset.nodes]
            seed = self.cfg.train.seed
            name = self.cfg.dataset_name
            if task in (EvalTask.CLASSIFY, EvalTask.BOTH):
                classify_rows = evaluation.evaluate_classification(
                    X, dataset.labels, self.cfg.train_fractions, self.cfg.runs, seed, name)
                rows.extend(classify_rows)
                written.extend(artifacts.write_curves(classify_rows, self.out_dir))
            if task in (EvalTask.CLUSTER, EvalTask.BOTH):
                rows.extend(evaluation.evaluate_clustering(X, dataset.labels, self.cfg.k, self.cfg.runs, seed, name))

        artifacts.write_metrics(rows, metrics_path)
        return written

    def _log_execution(self, result: StageResult) -> None:
        """Append the execution record to the stage log"""
        timestamp = datetime.now().isoformat()
        rss = f"{result.rss_mb:.1f}MB" if result.rss_mb is not None else "n/a"
        entry = (
            f"[{timestamp}] Stage: {result.stage.value} | Status: {result.status.value} | "
            f"Duration: {result.duration_ms}ms | RSS: {rss} | "
            f"Artifacts: {', '.join(result.artifacts) or '-'} | Error: {result.error_message or 'None'}"
        )
        if result.status == StageStatus.FAILED:
            logger.error(entry)
        else:
            logger.info(entry)
