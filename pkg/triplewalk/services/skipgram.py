"""
Skip-gram Service - Negative-sampling Skip-gram training over walk corpora

The model keeps an input vector and an output (context) vector per line
node. Training ascends, for every (center, context) pair in a window,

    log s(e_c . e'_x) + sum_j log s(-e_c . e'_nj)

with s the logistic sigmoid and n_j drawn from unigram^0.75 noise.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.special import expit
from tqdm import tqdm

from triplewalk.config import settings
from triplewalk.errors import ConfigError, GraphError, ParseError, TrainingError
from triplewalk.models.schemas import TrainConfig
from triplewalk.services.walks import AliasTable, WalkCorpus

SIGMOID_CLAMP = 30.0
NOISE_EXPONENT = 0.75
MIN_RATE_FRACTION = 1e-4

# centers per update block: vocabulary // ratio, clipped
BLOCK_VOCAB_RATIO = 8
MIN_BLOCK_CENTERS = 4
MAX_BLOCK_CENTERS = 64


def sigmoid(x):
    return expit(np.clip(x, -SIGMOID_CLAMP, SIGMOID_CLAMP))


def log_sigmoid(x):
    return -np.logaddexp(0.0, -np.asarray(x, dtype=np.float64))


def _check_dims(e_center: np.ndarray, e_context: np.ndarray, negatives: np.ndarray) -> None:
    d = e_center.shape[-1]
    if e_context.shape[-1] != d or (negatives.size and negatives.shape[-1] != d):
        raise GraphError(f"Dimension mismatch: center {e_center.shape}, context {e_context.shape}, "
                         f"negatives {negatives.shape}")


def pair_objective(e_center: np.ndarray, e_context: np.ndarray, negatives: np.ndarray) -> float:
    """Negative-sampling objective of one (center, context) pair with its negatives"""
    e_center = np.asarray(e_center, dtype=np.float64)
    e_context = np.asarray(e_context, dtype=np.float64)
    negatives = np.asarray(negatives, dtype=np.float64)
    d = e_center.shape[-1]
    if negatives.size == 0:
        negatives = np.empty((0, d))
    elif negatives.ndim != 2:
        raise GraphError(f"Negatives must be a (k, d) matrix, got shape {negatives.shape}")
    _check_dims(e_center, e_context, negatives)
    value = log_sigmoid(e_center @ e_context)
    if len(negatives):
        value = value + log_sigmoid(-(negatives @ e_center)).sum()
    return float(value)


def window_gradients(e_center: np.ndarray, contexts: np.ndarray,
                     negatives: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Gradients of the summed objective over m pairs sharing one center.

    contexts is (m, d) and negatives (m, k, d). Returns gradients for the
    center, contexts and negatives, and the summed objective.
    """
    _check_dims(e_center, contexts, negatives)
    pos = contexts @ e_center
    neg = negatives @ e_center
    pos_coef = 1.0 - sigmoid(pos)
    neg_coef = -sigmoid(neg)
    g_center = pos_coef @ contexts + np.einsum("mk,mkd->d", neg_coef, negatives)
    g_contexts = pos_coef[:, np.newaxis] * e_center
    g_negatives = neg_coef[:, :, np.newaxis] * e_center
    objective = float(log_sigmoid(pos).sum() + log_sigmoid(-neg).sum())
    return g_center, g_contexts, g_negatives, objective


def pair_gradients(e_center: np.ndarray, e_context: np.ndarray,
                   negatives: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of pair_objective w.r.t. center, context and each negative"""
    e_center = np.asarray(e_center, dtype=np.float64)
    negatives = np.asarray(negatives, dtype=np.float64)
    if negatives.ndim != 2:
        raise GraphError(f"Negatives must be a (k, d) matrix, got shape {negatives.shape}")
    negatives = negatives[np.newaxis]
    g_center, g_context, g_negatives, _ = window_gradients(
        e_center, np.asarray(e_context, dtype=np.float64)[np.newaxis, :], negatives)
    return g_center, g_context[0], g_negatives[0]


@dataclass
class EmbeddingMatrix:
    """Input vectors (the embeddings) and, after training, output vectors"""

    vectors: np.ndarray
    context: Optional[np.ndarray] = None
    tokens: Optional[List[str]] = None
    history: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def most_similar(self, node: int, topn: int = 10) -> List[Tuple[int, float]]:
        norms = np.linalg.norm(self.vectors, axis=1)
        norms[norms == 0] = 1.0
        unit = self.vectors / norms[:, np.newaxis]
        scores = unit @ unit[node]
        scores[node] = -np.inf
        best = np.argsort(-scores, kind="stable")[:topn]
        return [(int(i), float(scores[i])) for i in best]


def noise_table(corpus: WalkCorpus) -> AliasTable:
    return AliasTable(corpus.frequencies().astype(np.float64) ** NOISE_EXPONENT)


def batch_gradients(centers: np.ndarray, contexts: np.ndarray,
                    negatives: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Per-pair gradients for m independent (center, context, negatives) rows.

    centers and contexts are (m, d), negatives (m, k, d). Row p of the
    returned center gradient belongs to pair p, so summing the rows of one
    center reproduces window_gradients.
    """
    _check_dims(centers, contexts, negatives)
    pos = np.einsum("md,md->m", centers, contexts)
    neg = np.einsum("md,mkd->mk", centers, negatives)
    pos_coef = 1.0 - sigmoid(pos)
    neg_coef = -sigmoid(neg)
    g_centers = pos_coef[:, np.newaxis] * contexts + np.einsum("mk,mkd->md", neg_coef, negatives)
    g_contexts = pos_coef[:, np.newaxis] * centers
    g_negatives = neg_coef[:, :, np.newaxis] * centers[:, np.newaxis, :]
    objective = float(log_sigmoid(pos).sum() + log_sigmoid(-neg).sum())
    return g_centers, g_contexts, g_negatives, objective


def window_pairs(walk: np.ndarray, window: int) -> Tuple[np.ndarray, np.ndarray]:
    """(center position, context node) of every pair in a walk, ordered by center position"""
    n = len(walk)
    offsets = np.concatenate([np.arange(-window, 0), np.arange(1, window + 1)])
    positions = np.arange(n)[:, np.newaxis] + offsets
    valid = (positions >= 0) & (positions < n)
    center_pos = np.nonzero(valid)[0]
    return center_pos, walk[positions[valid]]


class SkipGramTrainer:
    """SGD over a walk corpus; one worker is deterministic, several follow the lock-free contract

    Updates are applied per block of consecutive centers of a walk, with one
    learning rate per block. Blocks shrink on small vocabularies so a node
    collects few stale updates in one block.
    """

    def __init__(self, corpus: WalkCorpus, cfg: TrainConfig):
        if cfg.dimension is None:
            raise ConfigError("TrainConfig.dimension must be resolved before training")
        if len(corpus) == 0 or len(corpus.tokens) == 0:
            raise GraphError("Cannot train on an empty walk corpus")
        self.corpus = corpus
        self.cfg = cfg
        d = cfg.dimension
        rng = np.random.default_rng(cfg.seed)
        self.w_in = (rng.random((corpus.node_count, d)) - 0.5) / d
        self.w_out = np.zeros((corpus.node_count, d))
        self.noise = noise_table(corpus)
        self.total_positions = len(corpus.tokens) * cfg.epochs
        self.processed = 0
        self.block_centers = int(np.clip(corpus.node_count // BLOCK_VOCAB_RATIO, MIN_BLOCK_CENTERS, MAX_BLOCK_CENTERS))

    def learning_rate(self) -> float:
        progress = self.processed / self.total_positions
        return self.cfg.learning_rate * max(MIN_RATE_FRACTION, 1.0 - progress)

    def _apply(self, centers: np.ndarray, contexts: np.ndarray, neg_ids: np.ndarray, rate: float) -> float:
        d = self.w_in.shape[1]
        g_centers, g_contexts, g_negatives, value = batch_gradients(
            self.w_in[centers], self.w_out[contexts], self.w_out[neg_ids])
        np.add.at(self.w_out, contexts, rate * g_contexts)
        np.add.at(self.w_out, neg_ids.ravel(), rate * g_negatives.reshape(-1, d))
        np.add.at(self.w_in, centers, rate * g_centers)
        return value

    def train_walk(self, walk: np.ndarray, rng: np.random.Generator) -> Tuple[float, int]:
        """One SGD pass over a walk; returns (summed objective, number of pairs)"""
        n = len(walk)
        objective = 0.0
        if n < 2:
            self.processed += n
            return objective, 0

        center_pos, contexts = window_pairs(walk, self.cfg.window)
        neg_ids = self.noise.sample(rng, (len(contexts), self.cfg.negatives))
        starts = np.arange(0, n, self.block_centers)
        bounds = np.searchsorted(center_pos, np.append(starts, n))
        for b, start in enumerate(starts):
            lo, hi = bounds[b], bounds[b + 1]
            rate = self.learning_rate()
            objective += self._apply(walk[center_pos[lo:hi]], contexts[lo:hi], neg_ids[lo:hi], rate)
            self.processed += min(self.block_centers, n - start)
        return objective, len(contexts)

    def _run_shard(self, walk_ids: np.ndarray, rng: np.random.Generator) -> Tuple[float, int]:
        objective, pairs = 0.0, 0
        for w in walk_ids:
            value, count = self.train_walk(self.corpus.walk(int(w)), rng)
            objective += value
            pairs += count
        return objective, pairs

    def train(self) -> EmbeddingMatrix:
        threads = self.cfg.threads
        streams = [np.random.default_rng(s) for s in np.random.SeedSequence(self.cfg.seed).spawn(threads)]
        walk_ids = np.arange(len(self.corpus))
        history: List[float] = []
        logger.info(f"Training skip-gram: {self.corpus.node_count} nodes, d={self.cfg.dimension}, "
                    f"w={self.cfg.window}, k={self.cfg.negatives}, epochs={self.cfg.epochs}, workers={threads}")

        for epoch in tqdm(range(self.cfg.epochs), desc="epochs", disable=not settings.progress):
            if threads == 1:
                objective, pairs = self._run_shard(walk_ids, streams[0])
            else:
                shards = [walk_ids[t::threads] for t in range(threads)]
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    results = list(pool.map(self._run_shard, shards, streams))
                objective = sum(r[0] for r in results)
                pairs = sum(r[1] for r in results)

            if not (np.isfinite(self.w_in).all() and np.isfinite(self.w_out).all()):
                raise TrainingError(f"Non-finite parameters after epoch {epoch + 1}")
            mean = objective / pairs if pairs else 0.0
            history.append(mean)
            logger.info(f"Epoch {epoch + 1}/{self.cfg.epochs}: mean objective {mean:.6f}, "
                        f"rate {self.learning_rate():.6f}")

        return EmbeddingMatrix(self.w_in, self.w_out, history=history)


def train(corpus: WalkCorpus, cfg: TrainConfig) -> EmbeddingMatrix:
    return SkipGramTrainer(corpus, cfg).train()


def mean_objective(E: EmbeddingMatrix, pairs: np.ndarray, negatives: np.ndarray) -> float:
    """Mean pair objective of (center, context) pairs with (P, k) negative ids"""
    if E.context is None:
        raise GraphError("Embedding matrix has no context vectors")
    values = [
        pair_objective(E.vectors[c], E.context[x], E.context[negatives[p]])
        for p, (c, x) in enumerate(pairs)
    ]
    return float(np.mean(values))


def save_embeddings(E: EmbeddingMatrix, tokens: List[str], path: Path) -> None:
    """word2vec text format: `count dim` header, then `token v1 ... vd` rows"""
    if len(tokens) != len(E):
        raise GraphError(f"{len(tokens)} tokens for {len(E)} vectors")
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        f.write(f"{len(E)} {E.dimension}\n")
        for token, row in zip(tokens, E.vectors.tolist()):
            f.write(token + " " + " ".join(f"{x:.9g}" for x in row) + "\n")


def load_embeddings(path: Path) -> EmbeddingMatrix:
    path = Path(path)
    with path.open("r", encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise ParseError("embedding header must be `count dim`", 1)
        count, dim = int(header[0]), int(header[1])
        tokens: List[str] = []
        vectors = np.empty((count, dim), dtype=np.float64)
        for number, line in enumerate(f, start=2):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != dim + 1:
                raise ParseError(f"expected token and {dim} values, found {len(fields)} fields", number)
            if len(tokens) == count:
                raise ParseError(f"more than {count} rows", number)
            try:
                vectors[len(tokens)] = [float(x) for x in fields[1:]]
            except ValueError:
                raise ParseError("non-numeric vector entry", number) from None
            tokens.append(fields[0])
    if len(tokens) != count:
        raise ParseError(f"header announces {count} rows, found {len(tokens)}")
    return EmbeddingMatrix(vectors, tokens=tokens)
