"""
Evaluation Service - Label construction, triple/edge classification and clustering
"""
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np
from loguru import logger
from networkx.algorithms.community import greedy_modularity_communities
from scipy.special import expit
from sklearn.cluster import KMeans
from sklearn.metrics import f1_score, normalized_mutual_info_score

from triplewalk.errors import GraphError
from triplewalk.models.graphs import (
    HomogeneousGraph, KnowledgeGraph, LabeledDataset, PropagationRule,
)
from triplewalk.models.schemas import Direction

L2_PENALTY = 1e-4
MAX_ITERATIONS = 1000
GRADIENT_TOLERANCE = 1e-6


# ---------------------------------------------------------------- labels

def propagate_labels(g: KnowledgeGraph, seed_labels: Dict[int, Set[str]],
                     rules: Sequence[PropagationRule]) -> Dict[int, Set[str]]:
    """Apply each rule once, in order, unioning source labels into targets"""
    labels = {v: set(ls) for v, ls in seed_labels.items()}
    for rule in rules:
        if not 0 <= rule.predicate < g.num_predicates:
            raise GraphError(f"Unknown predicate id {rule.predicate} in propagation rule")
        matching = g.triples[g.triples[:, 1] == rule.predicate]
        if rule.direction == Direction.SUBJECT_TO_OBJECT:
            sources, targets = matching[:, 0], matching[:, 2]
        else:
            sources, targets = matching[:, 2], matching[:, 0]
        # snapshot so a rule never feeds on its own output
        snapshot = {int(s): frozenset(labels.get(int(s), ())) for s in np.unique(sources)}
        for s, t in zip(sources.tolist(), targets.tolist()):
            if snapshot[s]:
                labels.setdefault(t, set()).update(snapshot[s])
        logger.debug(f"Rule {g.predicates[rule.predicate]} ({rule.direction.value}): "
                     f"{len(matching)} triples, {len(labels)} labeled entities")
    return labels


def seed_labels_from_tokens(g: KnowledgeGraph, token_labels: Dict[str, Set[str]]) -> Dict[int, Set[str]]:
    unknown = [t for t in token_labels if t not in g.entity_index]
    if unknown:
        logger.warning(f"Ignoring {len(unknown)} labeled tokens absent from the graph (e.g. {unknown[0]})")
    return {g.entity_index[t]: set(ls) for t, ls in token_labels.items() if t in g.entity_index}


def _dataset_from_signatures(signatures: Dict[int, str]) -> LabeledDataset:
    classes = sorted(set(signatures.values()))
    class_id = {c: i for i, c in enumerate(classes)}
    nodes = np.array(sorted(signatures), dtype=np.int64)
    labels = np.array([class_id[signatures[n]] for n in nodes.tolist()], dtype=np.int64)
    return LabeledDataset(nodes, labels, classes)


def label_triples(g: KnowledgeGraph, entity_labels: Dict[int, Set[str]]) -> LabeledDataset:
    """Triple label = union of endpoint labels; each distinct set becomes one class"""
    signatures: Dict[int, str] = {}
    for t, (s, _, o) in enumerate(g.triples.tolist()):
        merged = entity_labels.get(s, set()) | entity_labels.get(o, set())
        if merged:
            signatures[t] = ",".join(sorted(merged))
    dataset = _dataset_from_signatures(signatures)
    logger.info(f"Labeled {len(dataset.nodes)} of {g.num_triples} triples into {dataset.num_classes} classes")
    return dataset


def label_edges(g: HomogeneousGraph, node_labels: Dict[int, Set[str]]) -> LabeledDataset:
    """Edge label = union of endpoint labels, as for triples"""
    signatures: Dict[int, str] = {}
    for e, (i, j) in enumerate(g.edges.tolist()):
        merged = node_labels.get(i, set()) | node_labels.get(j, set())
        if merged:
            signatures[e] = ",".join(sorted(merged))
    return _dataset_from_signatures(signatures)


def label_tokens(tokens: Sequence[str], token_labels: Dict[str, Set[str]]) -> LabeledDataset:
    """Labels given directly per embedding row token"""
    signatures = {row: ",".join(sorted(token_labels[t])) for row, t in enumerate(tokens)
                  if token_labels.get(t)}
    return _dataset_from_signatures(signatures)


def detect_communities(g: HomogeneousGraph) -> np.ndarray:
    """Greedy agglomerative modularity communities; returns node -> community id"""
    graph = nx.Graph()
    graph.add_nodes_from(range(g.num_nodes))
    graph.add_edges_from(g.edges.tolist())
    communities = greedy_modularity_communities(graph)
    ordered = sorted((sorted(c) for c in communities), key=lambda c: c[0])
    membership = np.empty(g.num_nodes, dtype=np.int64)
    for cid, members in enumerate(ordered):
        membership[members] = cid
    logger.info(f"Detected {len(ordered)} communities over {g.num_nodes} nodes")
    return membership


def label_edges_by_community(g: HomogeneousGraph, membership: np.ndarray) -> LabeledDataset:
    """Intra-community edges take their community id; inter-community edges are left out"""
    ci = membership[g.edges[:, 0]]
    cj = membership[g.edges[:, 1]]
    inside = np.flatnonzero(ci == cj)
    signatures = {int(e): str(int(ci[e])) for e in inside}
    classes = sorted(set(signatures.values()), key=int)
    class_id = {c: i for i, c in enumerate(classes)}
    labels = np.array([class_id[signatures[int(e)]] for e in inside], dtype=np.int64)
    return LabeledDataset(inside.astype(np.int64), labels, classes)


# ---------------------------------------------------------------- classification

def logistic_loss(w: np.ndarray, X: np.ndarray, y: np.ndarray, penalty: float = L2_PENALTY) -> float:
    """Mean binary cross-entropy with an L2 term; the last entry of w is the intercept"""
    z = X @ w[:-1] + w[-1]
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * penalty * np.dot(w[:-1], w[:-1]))


def logistic_gradient(w: np.ndarray, X: np.ndarray, y: np.ndarray, penalty: float = L2_PENALTY) -> np.ndarray:
    z = X @ w[:-1] + w[-1]
    residual = (expit(z) - y) / len(y)
    grad = np.empty_like(w)
    grad[:-1] = X.T @ residual + penalty * w[:-1]
    grad[-1] = residual.sum()
    return grad


def fit_binary_logistic(X: np.ndarray, y: np.ndarray, penalty: float = L2_PENALTY,
                        max_iter: int = MAX_ITERATIONS) -> np.ndarray:
    """Full-batch gradient descent with Armijo backtracking"""
    w = np.zeros(X.shape[1] + 1)
    step = 1.0
    loss = logistic_loss(w, X, y, penalty)
    for _ in range(max_iter):
        grad = logistic_gradient(w, X, y, penalty)
        norm2 = float(grad @ grad)
        if norm2 < GRADIENT_TOLERANCE ** 2:
            break
        step *= 2.0
        while True:
            candidate = w - step * grad
            candidate_loss = logistic_loss(candidate, X, y, penalty)
            if candidate_loss <= loss - 0.5 * step * norm2:
                break
            step *= 0.5
            if step < 1e-12:
                return w
        w, loss = candidate, candidate_loss
    return w


@dataclass
class OneVsRestLogistic:
    """One binary logistic model per class; predicts the highest-scoring class"""

    classes: np.ndarray
    weights: np.ndarray

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights[:, :-1].T + self.weights[:, -1]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.decision_function(X), axis=1)]


def stratified_split(y: np.ndarray, train_fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split; each class contributes round(fraction * size) training items"""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(y):
        members = rng.permutation(np.flatnonzero(y == c))
        cut = int(round(train_fraction * len(members)))
        train.append(members[:cut])
        test.append(members[cut:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def fit_ovr(X: np.ndarray, y: np.ndarray) -> OneVsRestLogistic:
    classes = np.unique(y)
    if len(classes) < 2:
        raise GraphError("One-vs-rest classification needs at least 2 classes")
    weights = np.stack([fit_binary_logistic(X, (y == c).astype(np.float64)) for c in classes])
    return OneVsRestLogistic(classes, weights)


def train_logistic_ovr(X: np.ndarray, y: np.ndarray, train_fraction: float,
                       seed: int) -> Tuple[OneVsRestLogistic, np.ndarray, np.ndarray]:
    """Stratified split, then one-vs-rest fit; returns (classifier, train idx, test idx)"""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise GraphError("One-vs-rest classification needs at least 2 classes")
    train_idx, test_idx = stratified_split(y, train_fraction, seed)
    absent = np.setdiff1d(np.unique(y), np.unique(y[train_idx]))
    if len(absent):
        logger.warning(f"Dropping {len(absent)} classes absent from the training split: {absent.tolist()}")
        test_idx = test_idx[~np.isin(y[test_idx], absent)]
    return fit_ovr(X[train_idx], y[train_idx]), train_idx, test_idx


def _check_lengths(predicted: Sequence, actual: Sequence) -> None:
    if len(predicted) != len(actual):
        raise ValueError(f"Length mismatch: {len(predicted)} predictions, {len(actual)} labels")
    if len(actual) == 0:
        raise ValueError("At least one item is required")


def micro_f1(predicted: Sequence, actual: Sequence) -> float:
    _check_lengths(predicted, actual)
    return float(f1_score(actual, predicted, average="micro", zero_division=0))


def macro_f1(predicted: Sequence, actual: Sequence) -> float:
    _check_lengths(predicted, actual)
    return float(f1_score(actual, predicted, average="macro", zero_division=0))


# ---------------------------------------------------------------- clustering

def kmeans(X: np.ndarray, k: int, seed: int, restarts: int = 10, max_iter: int = 300) -> Tuple[np.ndarray, float]:
    """Lloyd iterations from k-means++ seeding, best of `restarts` by inertia"""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise GraphError("Cannot cluster an empty point set")
    if not 1 <= k <= X.shape[0]:
        raise GraphError(f"k must lie in [1, {X.shape[0]}], got {k}")
    model = KMeans(n_clusters=k, init="k-means++", n_init=restarts, max_iter=max_iter,
                   tol=0.0, algorithm="lloyd", random_state=seed)
    assignment = model.fit_predict(X)
    return assignment, float(model.inertia_)


def nmi(partition_a: Sequence, partition_b: Sequence) -> float:
    """Mutual information normalized by the geometric mean of the entropies"""
    if len(partition_a) != len(partition_b):
        raise ValueError(f"Length mismatch: {len(partition_a)} vs {len(partition_b)}")
    a = np.asarray(partition_a)
    b = np.asarray(partition_b)
    if len(a) == 0:
        raise ValueError("At least one item is required")
    a_constant, b_constant = len(np.unique(a)) == 1, len(np.unique(b)) == 1
    if a_constant or b_constant:
        return 1.0 if a_constant and b_constant else 0.0
    return float(normalized_mutual_info_score(a, b, average_method="geometric"))


# ---------------------------------------------------------------- protocols

@dataclass(frozen=True)
class MetricRow:
    task: str
    dataset: str
    train_fraction: Optional[float]
    metric: str
    value: float


def evaluate_classification(X: np.ndarray, y: np.ndarray, fractions: Iterable[float], runs: int,
                            seed: int, dataset: str) -> List[MetricRow]:
    """Mean micro/macro F1 over `runs` seeds for each training fraction"""
    rows: List[MetricRow] = []
    for fraction in fractions:
        micro, macro = [], []
        for run in range(runs):
            try:
                classifier, _, test_idx = train_logistic_ovr(X, y, fraction, seed + run)
            except GraphError as e:
                logger.warning(f"Skipping fraction {fraction}, run {run}: {e}")
                continue
            if len(test_idx) == 0:
                logger.warning(f"Empty test split at fraction {fraction}, run {run}")
                continue
            predicted = classifier.predict(X[test_idx])
            micro.append(micro_f1(predicted, y[test_idx]))
            macro.append(macro_f1(predicted, y[test_idx]))
        if micro:
            rows.append(MetricRow("classify", dataset, fraction, "micro_f1", float(np.mean(micro))))
            rows.append(MetricRow("classify", dataset, fraction, "macro_f1", float(np.mean(macro))))
            logger.info(f"{dataset} @ {fraction:.0%}: micro-F1 {np.mean(micro):.4f}, macro-F1 {np.mean(macro):.4f}")
    return rows


def evaluate_clustering(X: np.ndarray, y: np.ndarray, k: Optional[int], runs: int,
                        seed: int, dataset: str) -> List[MetricRow]:
    """Mean NMI between k-means clusters and the reference classes"""
    k = k or len(np.unique(y))
    scores = [nmi(kmeans(X, k, seed + run)[0], y) for run in range(runs)]
    logger.info(f"{dataset}: NMI {np.mean(scores):.4f} over {runs} runs (k={k})")
    return [MetricRow("cluster", dataset, None, "nmi", float(np.mean(scores)))]

