"""Biased second-order random walks and co-occurrence extraction.

Walks use the node2vec transition rule: stepping from ``v`` after arriving
from ``t``, a neighbor ``x`` is drawn proportionally to ``w/p`` if ``x == t``,
``w`` if ``x`` neighbors ``t``, and ``w/q`` otherwise. With ``p == q == 1``
this collapses to first-order weighted sampling, which is the vectorized fast
path. Every walk consumes its own seeded uniform stream, so the walk set is a
pure function of (graph, config) no matter how generation is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import SocialGraph
from .rng import derive_rng


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 20
    return_param: float = 1.0
    inout_param: float = 1.0
    window: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.walks_per_node < 0 or self.walk_length < 1:
            raise ValueError("walks_per_node must be >= 0 and walk_length >= 1")
        if self.return_param <= 0.0 or self.inout_param <= 0.0:
            raise ValueError("return and in-out parameters must be positive")
        if self.window < 1:
            raise ValueError("window must be >= 1")


@dataclass(frozen=True)
class CompleteGraphView:
    """Stand-in for a fully connected unweighted graph; never materialized.

    Transitions are uniform over every node except the current one, which is
    what the node2vec rule reduces to on a complete unweighted graph.
    """

    node_ids: tuple[int, ...]

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)


@dataclass
class CoOccurrenceSet:
    """Multiset of (center, context) device-id pairs from windowed walks."""

    centers: np.ndarray
    contexts: np.ndarray

    def __post_init__(self) -> None:
        if self.centers.shape != self.contexts.shape:
            raise ValueError("centers and contexts must align")
        if np.any(self.centers == self.contexts):
            raise ValueError("self pairs are not allowed")

    def __len__(self) -> int:
        return int(self.centers.shape[0])

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.centers.tolist(), self.contexts.tolist()))


def _walk_uniforms(seed: int, n_walks: int, n_steps: int) -> np.ndarray:
    """One row of uniforms per walk, each from its own derived stream."""
    if n_walks == 0 or n_steps == 0:
        return np.zeros((n_walks, n_steps), dtype=np.float64)
    rows = [
        derive_rng(seed, "walk", w).random(n_steps) for w in range(n_walks)
    ]
    return np.vstack(rows)


def generate_walks(
    graph: SocialGraph | CompleteGraphView, config: WalkConfig
) -> list[np.ndarray]:
    """All walks, ``walks_per_node`` per start node, as device-id arrays.

    Isolated starts yield singleton walks. Walk order is node-major then
    repetition, matching the per-walk seed derivation.
    """
    if isinstance(graph, CompleteGraphView):
        return _complete_walks(graph, config)
    return _graph_walks(graph, config)


def _complete_walks(view: CompleteGraphView, config: WalkConfig) -> list[np.ndarray]:
    n = view.n_nodes
    m = n * config.walks_per_node
    ids = np.asarray(view.node_ids, dtype=np.int64)
    starts = np.repeat(np.arange(n, dtype=np.int64), config.walks_per_node)
    if n <= 1 or config.walk_length == 1:
        return [ids[s : s + 1].copy() for s in starts]
    steps = config.walk_length - 1
    uniforms = _walk_uniforms(config.seed, m, steps)
    positions = np.empty((m, config.walk_length), dtype=np.int64)
    positions[:, 0] = starts
    cur = starts.copy()
    for step in range(steps):
        draw = np.minimum((uniforms[:, step] * (n - 1)).astype(np.int64), n - 2)
        nxt = np.where(draw < cur, draw, draw + 1)
        positions[:, step + 1] = nxt
        cur = nxt
    return [ids[row] for row in positions]


def _graph_walks(graph: SocialGraph, config: WalkConfig) -> list[np.ndarray]:
    n = graph.n_nodes
    m = n * config.walks_per_node
    ids = np.asarray(graph.node_ids, dtype=np.int64)
    starts = np.repeat(np.arange(n, dtype=np.int64), config.walks_per_node)
    if m == 0:
        return []
    if config.walk_length == 1:
        return [ids[s : s + 1].copy() for s in starts]

    indptr, indices, weights = graph.csr_arrays()
    degrees = np.diff(indptr)
    steps = config.walk_length - 1
    uniforms = _walk_uniforms(config.seed, m, steps)

    first_order = config.return_param == 1.0 and config.inout_param == 1.0
    uniform_weights = weights.size == 0 or np.all(weights == weights[0])
    if first_order and uniform_weights:
        walks_mat, lengths = _first_order_unit_walks(
            starts, indptr, indices, degrees, uniforms
        )
        return [ids[walks_mat[i, : lengths[i]]] for i in range(m)]

    out: list[np.ndarray] = []
    neighbor_sets = [set(indices[indptr[i] : indptr[i + 1]].tolist()) for i in range(n)]
    for w in range(m):
        path = _single_biased_walk(
            int(starts[w]),
            indptr,
            indices,
            weights,
            neighbor_sets,
            uniforms[w],
            config,
        )
        out.append(ids[np.asarray(path, dtype=np.int64)])
    return out


def _first_order_unit_walks(
    starts: np.ndarray,
    indptr: np.ndarray,
    indices: np.ndarray,
    degrees: np.ndarray,
    uniforms: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    m, steps = uniforms.shape
    walks = np.zeros((m, steps + 1), dtype=np.int64)
    walks[:, 0] = starts
    # in an undirected graph a walk only stalls when its start is isolated
    alive = degrees[starts] > 0
    lengths = np.where(alive, steps + 1, 1).astype(np.int64)
    if indices.size == 0:
        walks[:, 1:] = starts[:, None]
        return walks, np.ones(m, dtype=np.int64)
    cur = starts.copy()
    for step in range(steps):
        deg = degrees[cur]
        offset = np.minimum(
            (uniforms[:, step] * np.maximum(deg, 1)).astype(np.int64),
            np.maximum(deg - 1, 0),
        )
        nxt = indices[np.minimum(indptr[cur] + offset, indices.size - 1)]
        cur = np.where(alive, nxt, cur)
        walks[:, step + 1] = cur
    return walks, lengths


def _single_biased_walk(
    start: int,
    indptr: np.ndarray,
    indices: np.ndarray,
    weights: np.ndarray,
    neighbor_sets: list[set[int]],
    uniforms: np.ndarray,
    config: WalkConfig,
) -> list[int]:
    path = [start]
    prev = -1
    cur = start
    for u in uniforms:
        lo, hi = int(indptr[cur]), int(indptr[cur + 1])
        if lo == hi:
            break
        nbrs = indices[lo:hi]
        w = weights[lo:hi].astype(np.float64).copy()
        if prev >= 0:
            prev_nbrs = neighbor_sets[prev]
            for i, x in enumerate(nbrs):
                if x == prev:
                    w[i] /= config.return_param
                elif int(x) not in prev_nbrs:
                    w[i] /= config.inout_param
        cum = np.cumsum(w)
        pick = int(np.searchsorted(cum, u * cum[-1], side="right"))
        pick = min(pick, len(nbrs) - 1)
        prev = cur
        cur = int(nbrs[pick])
        path.append(cur)
    return path


def co_occurrences(walks: Sequence[np.ndarray], window: int) -> CoOccurrenceSet:
    """Every ordered pair within ``window`` positions, self pairs dropped."""
    if window < 1:
        raise ValueError("window must be >= 1")
    by_length: dict[int, list[np.ndarray]] = {}
    for walk in walks:
        if len(walk) >= 2:
            by_length.setdefault(len(walk), []).append(walk)

    center_chunks: list[np.ndarray] = []
    context_chunks: list[np.ndarray] = []
    for length, group in sorted(by_length.items()):
        mat = np.vstack(group)
        for d in range(1, min(window, length - 1) + 1):
            left = mat[:, :-d].ravel()
            right = mat[:, d:].ravel()
            keep = left != right
            center_chunks.append(left[keep])
            context_chunks.append(right[keep])
            center_chunks.append(right[keep])
            context_chunks.append(left[keep])

    if not center_chunks:
        empty = np.zeros(0, dtype=np.int64)
        return CoOccurrenceSet(centers=empty, contexts=empty.copy())
    return CoOccurrenceSet(
        centers=np.concatenate(center_chunks),
        contexts=np.concatenate(context_chunks),
    )
