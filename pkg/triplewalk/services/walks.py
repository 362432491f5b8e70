"""
Walk Service - Alias-table sampling and truncated weighted random walks on line graphs
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np
from loguru import logger
from tqdm import tqdm

from triplewalk.config import settings
from triplewalk.errors import GraphError
from triplewalk.models.graphs import TripleLineGraph
from triplewalk.models.schemas import WalkConfig

_BATCH_WALKS = 1024


def build_alias(weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vose alias table (accept probabilities, alias indices) for non-negative weights"""
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights < 0):
        raise GraphError("Negative weight encountered while building a sampling table")
    total = weights.sum()
    if not total > 0:
        raise GraphError("Cannot sample from an all-zero weight vector")

    n = len(weights)
    scaled = weights * (n / total)
    accept = np.ones(n, dtype=np.float64)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]

    while small and large:
        s, l = small.pop(), large.pop()
        accept[s] = scaled[s]
        alias[s] = l
        scaled[l] = scaled[l] - (1.0 - scaled[s])
        if scaled[l] < 1.0:
            small.append(l)
        else:
            large.append(l)
    # leftovers are 1 up to rounding
    for i in small + large:
        accept[i] = 1.0
    return accept, alias


class AliasTable:
    """O(1) sampling from a fixed discrete distribution"""

    def __init__(self, weights: np.ndarray):
        self.accept, self.alias = build_alias(weights)

    def __len__(self) -> int:
        return len(self.accept)

    def sample(self, rng: np.random.Generator, size: Union[int, Tuple[int, ...]]) -> np.ndarray:
        n = len(self.accept)
        columns = np.minimum((rng.random(size) * n).astype(np.int64), n - 1)
        keep = rng.random(size) < self.accept[columns]
        return np.where(keep, columns, self.alias[columns])


class WalkSampler:
    """Per-node alias tables laid out along the CSR adjacency of a line graph"""

    def __init__(self, L: TripleLineGraph):
        adj = L.adjacency
        self.node_count = L.node_count
        self.indptr = adj.indptr.astype(np.int64)
        self.indices = adj.indices.astype(np.int64)
        self.accept = np.ones(len(self.indices), dtype=np.float64)
        self.alias = np.zeros(len(self.indices), dtype=np.int64)
        for node in range(self.node_count):
            lo, hi = self.indptr[node], self.indptr[node + 1]
            if hi > lo:
                self.accept[lo:hi], self.alias[lo:hi] = build_alias(adj.data[lo:hi])

    def degree(self, node: int) -> int:
        return int(self.indptr[node + 1] - self.indptr[node])

    def step(self, current: np.ndarray, uniforms: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Advance every walk in `current`; returns (next nodes, has-neighbor mask)"""
        lo = self.indptr[current]
        degree = self.indptr[current + 1] - lo
        movable = degree > 0
        column = np.minimum((uniforms[:, 0] * degree).astype(np.int64), np.maximum(degree - 1, 0))
        slot = np.where(movable, lo + column, 0)
        if len(self.accept) == 0:
            return current, movable
        keep = uniforms[:, 1] < self.accept[slot]
        chosen = np.where(keep, column, self.alias[slot])
        nxt = self.indices[np.where(movable, lo + chosen, 0)]
        return np.where(movable, nxt, current), movable


def sample_next(L: Union[TripleLineGraph, WalkSampler], current: int,
                rng: np.random.Generator) -> Optional[int]:
    """Weight-proportional neighbor of `current`, or None for a node without neighbors.

    A bare line graph only gets an alias table for `current`.
    """
    if not 0 <= current < L.node_count:
        raise GraphError(f"Invalid line node {current}")
    if isinstance(L, WalkSampler):
        if L.degree(current) == 0:
            return None
        nxt, _ = L.step(np.array([current]), rng.random((1, 2)))
        return int(nxt[0])

    neighbors = L.neighbors(current)
    if len(neighbors) == 0:
        return None
    adj = L.adjacency
    weights = adj.data[adj.indptr[current]:adj.indptr[current + 1]]
    return int(neighbors[AliasTable(weights).sample(rng, 1)[0]])


@dataclass(frozen=True)
class WalkCorpus:
    """Walks stored back to back; walk w is tokens[offsets[w]:offsets[w + 1]]"""

    tokens: np.ndarray
    offsets: np.ndarray
    node_count: int

    @classmethod
    def from_walks(cls, walks: List[List[int]], node_count: int) -> "WalkCorpus":
        lengths = np.array([len(w) for w in walks], dtype=np.int64)
        offsets = np.zeros(len(walks) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        tokens = np.concatenate([np.asarray(w, dtype=np.int64) for w in walks]) if walks else np.empty(0, np.int64)
        return cls(tokens, offsets, node_count)

    def __len__(self) -> int:
        return len(self.offsets) - 1

    def __iter__(self) -> Iterator[np.ndarray]:
        for w in range(len(self)):
            yield self.walk(w)

    def walk(self, w: int) -> np.ndarray:
        return self.tokens[self.offsets[w]:self.offsets[w + 1]]

    def frequencies(self) -> np.ndarray:
        return np.bincount(self.tokens, minlength=self.node_count)


def walk_rng(seed: int, start: int, walk_index: int) -> np.random.Generator:
    """Independent stream for one (start node, walk index) pair"""
    return np.random.default_rng([seed, start, walk_index])


def _walk_batch(sampler: WalkSampler, cfg: WalkConfig, walk_ids: range) -> List[np.ndarray]:
    n = sampler.node_count
    starts = np.array([w % n for w in walk_ids], dtype=np.int64)
    indices = [w // n for w in walk_ids]
    steps = cfg.max_length - 1
    uniforms = np.stack([
        walk_rng(cfg.seed, int(s), i).random((steps, 2)) for s, i in zip(starts, indices)
    ]) if steps else np.empty((len(starts), 0, 2))

    paths = np.empty((len(starts), cfg.max_length), dtype=np.int64)
    paths[:, 0] = starts
    lengths = np.ones(len(starts), dtype=np.int64)
    alive = np.ones(len(starts), dtype=bool)
    current = starts
    for t in range(steps):
        current, movable = sampler.step(current, uniforms[:, t, :])
        alive &= movable
        paths[:, t + 1] = current
        lengths += alive
    return [paths[r, :lengths[r]] for r in range(len(starts))]


def generate_walks(L: TripleLineGraph, cfg: WalkConfig, threads: int = 1) -> WalkCorpus:
    """n walks of length <= L from every line node, ordered by walk index then start node"""
    if L.node_count < 1:
        raise GraphError("Cannot walk on an empty line graph")
    sampler = WalkSampler(L)
    total = cfg.walks_per_node * L.node_count
    batches = [range(lo, min(lo + _BATCH_WALKS, total)) for lo in range(0, total, _BATCH_WALKS)]
    logger.info(f"Generating {total} walks (n={cfg.walks_per_node}, L={cfg.max_length}, seed={cfg.seed})")

    progress = tqdm(total=len(batches), desc="walks", disable=not settings.progress)
    walks: List[np.ndarray] = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for chunk in pool.map(lambda b: _walk_batch(sampler, cfg, b), batches):
                walks.extend(chunk)
                progress.update()
    else:
        for batch in batches:
            walks.extend(_walk_batch(sampler, cfg, batch))
            progress.update()
    progress.close()

    corpus = WalkCorpus.from_walks(walks, L.node_count)
    logger.info(f"Walk corpus: {len(corpus)} walks, {len(corpus.tokens)} tokens")
    return corpus
