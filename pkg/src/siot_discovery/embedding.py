"""Skip-gram embedding of devices under three input modes.

A device ``w`` is represented as ``vec(w) = F_w @ E`` where ``F_w`` is its
one-hot feature row and ``E`` a trainable encoder. The conditional
probability of seeing context ``w'`` near center ``w`` is the softmax of
``vec(w) . vec(w')`` over all devices, and training minimizes the summed
negative log-likelihood of the observed co-occurrence pairs.

Modes:

* ``edges_only``: features are neutralized; every device gets a free
  trainable vector and co-occurrences come from walks on the real graph.
* ``attributes_only``: the graph is neutralized; walks run on a complete
  unweighted view so the pair distribution carries no structure.
* ``edges_and_attributes``: both inputs used as-is.

`negative_samples == 0` trains with the exact softmax loss (one full-batch
gradient step per epoch); positive counts use the standard sigmoid
negative-sampling estimator with a unigram^0.75 noise distribution.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DivergedTraining, EmptyPairSet
from .features import FeatureEncoding
from .graph import SocialGraph
from .rng import derive_rng
from .walks import CompleteGraphView, WalkConfig, co_occurrences, generate_walks

EDGES_ONLY = "edges_only"
ATTRIBUTES_ONLY = "attributes_only"
EDGES_AND_ATTRIBUTES = "edges_and_attributes"
MODES = (EDGES_ONLY, ATTRIBUTES_ONLY, EDGES_AND_ATTRIBUTES)

_MODE_CODES = {m: i for i, m in enumerate(MODES)}
_EMBED_MAGIC = struct.Struct("<IIBq")


@dataclass(frozen=True)
class EmbeddingConfig:
    mode: str = EDGES_AND_ATTRIBUTES
    dim: int = 32
    epochs: int = 20
    learning_rate: float = 0.025
    negative_samples: int = 5
    batch_size: int = 512
    eval_pairs: int = 512
    threads: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.dim < 1 or self.epochs < 0 or self.batch_size < 1:
            raise ValueError("dim and batch_size must be >= 1, epochs >= 0")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.negative_samples < 0 or self.eval_pairs < 0 or self.threads < 1:
            raise ValueError("negative_samples/eval_pairs/threads out of range")


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Trained vectors, row-aligned with the graph's node order."""

    vectors: np.ndarray
    mode: str
    seed: int
    loss_history: tuple[float, ...]
    accuracy_history: tuple[float, ...]

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.vectors)):
            raise DivergedTraining("embedding contains NaN or Inf")

    @property
    def n_nodes(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


def prepare_mode_inputs(
    graph: SocialGraph, encoding: FeatureEncoding, mode: str
) -> tuple[SocialGraph | CompleteGraphView, np.ndarray | None]:
    """Effective (graph, features) pair for a mode.

    ``None`` features mean free per-node vectors. The complete graph for
    attributes_only is a lazy view, never materialized.
    """
    if tuple(encoding.device_ids) != tuple(graph.node_ids):
        raise ValueError("encoding rows and graph nodes are not aligned")
    if mode == EDGES_ONLY:
        return graph, None
    if mode == ATTRIBUTES_ONLY:
        return CompleteGraphView(node_ids=graph.node_ids), encoding.matrix
    if mode == EDGES_AND_ATTRIBUTES:
        return graph, encoding.matrix
    raise ValueError(f"unknown mode {mode!r}")


def softmax_probabilities(vectors: np.ndarray) -> np.ndarray:
    """Row-stochastic matrix P[c, n] = P(n | c) under the dot-product softmax."""
    scores = vectors @ vectors.T
    scores -= scores.max(axis=1, keepdims=True)
    np.exp(scores, out=scores)
    scores /= scores.sum(axis=1, keepdims=True)
    return scores


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def exact_loss_and_gradient(
    vectors: np.ndarray, centers: np.ndarray, contexts: np.ndarray
) -> tuple[float, np.ndarray]:
    """Full-softmax loss and gradient with respect to the vectors."""
    n = vectors.shape[0]
    scores = vectors @ vectors.T
    row_max = scores.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(scores - row_max).sum(axis=1, keepdims=True)) + row_max

    counts = np.zeros((n, n), dtype=np.float64)
    np.add.at(counts, (centers, contexts), 1.0)
    per_center = counts.sum(axis=1)

    loss = float(-(counts * scores).sum() + (per_center * log_z[:, 0]).sum())
    probs = np.exp(scores - log_z)
    d_scores = -counts + per_center[:, None] * probs
    grad = (d_scores + d_scores.T) @ vectors
    return loss, grad


def sampled_loss_and_gradient(
    vectors: np.ndarray,
    centers: np.ndarray,
    contexts: np.ndarray,
    negatives: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Sigmoid negative-sampling estimator; negatives shape (len(pairs), k)."""
    zc = vectors[centers]
    zo = vectors[contexts]
    zn = vectors[negatives]

    s_pos = np.einsum("bd,bd->b", zc, zo)
    s_neg = np.einsum("bd,bkd->bk", zc, zn)
    loss = float(np.logaddexp(0.0, -s_pos).sum() + np.logaddexp(0.0, s_neg).sum())

    g_pos = _sigmoid(s_pos) - 1.0
    g_neg = _sigmoid(s_neg)
    # one ordered bincount pass accumulates all three contribution groups;
    # per gradient element the addition order matches sequential scatters
    dim = vectors.shape[1]
    offsets = np.arange(dim)
    flat_index = np.concatenate(
        [
            (centers[:, None] * dim + offsets).ravel(),
            (contexts[:, None] * dim + offsets).ravel(),
            (negatives[..., None] * dim + offsets).ravel(),
        ]
    )
    flat_value = np.concatenate(
        [
            (g_pos[:, None] * zo + np.einsum("bk,bkd->bd", g_neg, zn)).ravel(),
            (g_pos[:, None] * zc).ravel(),
            (g_neg[..., None] * zc[:, None, :]).ravel(),
        ]
    )
    grad = np.bincount(
        flat_index, weights=flat_value, minlength=vectors.size
    ).reshape(vectors.shape)
    return loss, grad


def loss_and_gradient(
    vectors: np.ndarray,
    pairs: np.ndarray,
    exact: bool = True,
    negative_samples: int = 5,
    rng: np.random.Generator | None = None,
) -> tuple[float, np.ndarray]:
    """Loss and gradient over (center, context) row pairs.

    ``exact`` uses the full softmax; otherwise negatives are drawn from the
    unigram^0.75 distribution of the provided contexts using ``rng``.
    """
    pairs = np.asarray(pairs, dtype=np.int64)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("pairs must have shape (m, 2)")
    centers, contexts = pairs[:, 0], pairs[:, 1]
    if exact:
        return exact_loss_and_gradient(vectors, centers, contexts)
    if rng is None:
        rng = derive_rng(0, "loss-negatives")
    noise = _noise_distribution(contexts, vectors.shape[0])
    negatives = _draw_negatives(noise, rng, len(centers), negative_samples)
    return sampled_loss_and_gradient(vectors, centers, contexts, negatives)


def _noise_distribution(contexts: np.ndarray, n: int) -> np.ndarray:
    counts = np.bincount(contexts, minlength=n).astype(np.float64)
    noise = counts**0.75
    total = noise.sum()
    if total <= 0.0:
        return np.full(n, 1.0 / n)
    return noise / total


def _draw_negatives(
    noise: np.ndarray, rng: np.random.Generator, m: int, k: int
) -> np.ndarray:
    cum = np.cumsum(noise)
    cum[-1] = 1.0
    draws = np.searchsorted(cum, rng.random((m, k)), side="right")
    return np.minimum(draws, len(noise) - 1).astype(np.int64)


class _OneHotFactor:
    """Gather/scatter form of a binary feature matrix with the same number
    of ones in every row. Expanding factored parameters collapses to a
    row gather and folding a gradient back collapses to grouped segment
    sums, so neither needs the dense product on the hot span path."""

    def __init__(self, columns: np.ndarray, width: int) -> None:
        self.columns = columns
        self.width = width
        # group gradient rows by target column once; the grouping only
        # depends on the matrix, not on the gradient values
        self._groups = []
        for j in range(columns.shape[1]):
            order = np.argsort(columns[:, j], kind="stable")
            key = columns[order, j]
            starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
            self._groups.append((order, starts, key[starts]))

    def expand(self, params: np.ndarray) -> np.ndarray:
        """Rows of ``matrix @ params`` as sums of gathered parameter rows."""
        return params[self.columns].sum(axis=1)

    def fold(self, grad_vectors: np.ndarray) -> np.ndarray:
        """``matrix.T @ grad_vectors`` as per-column segment sums."""
        out = np.zeros((self.width, grad_vectors.shape[1]), dtype=grad_vectors.dtype)
        for order, starts, targets in self._groups:
            # targets are distinct within a group, so plain fancy-index
            # accumulation is safe here
            out[targets] += np.add.reduceat(grad_vectors[order], starts, axis=0)
        return out


def _one_hot_factor(matrix: np.ndarray) -> _OneHotFactor | None:
    """Index form of ``matrix``, or None when it is not constant-ones binary."""
    n = matrix.shape[0]
    rows, cols = np.nonzero(matrix)
    if n == 0 or len(cols) == 0 or len(cols) % n != 0:
        return None
    per_row = len(cols) // n
    if not np.all(np.bincount(rows, minlength=n) == per_row):
        return None
    if not np.all(matrix[rows, cols] == 1.0):
        return None
    return _OneHotFactor(cols.reshape(n, per_row), matrix.shape[1])


def _row_mapper(node_ids: tuple[int, ...]) -> Callable[[np.ndarray], np.ndarray]:
    ids = np.asarray(node_ids, dtype=np.int64)
    order = np.argsort(ids, kind="stable")
    sorted_ids = ids[order]

    def to_rows(device_ids: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(sorted_ids, device_ids)
        return order[pos]

    return to_rows


def build_held_out_pairs(
    graph: SocialGraph,
    walk_config: WalkConfig,
    n_pairs: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Balanced evaluation pairs as row indices: (positives, negatives).

    Positives are sampled from co-occurrences of fresh walks on the real
    graph; negatives are uniform device pairs that never co-occurred there.
    """
    eval_walk_cfg = replace(
        walk_config,
        walks_per_node=max(1, min(walk_config.walks_per_node, 2)),
        seed=int(derive_rng(seed, "eval-walk-seed").integers(2**62)),
    )
    observed = co_occurrences(generate_walks(graph, eval_walk_cfg), walk_config.window)
    if len(observed) == 0:
        raise EmptyPairSet("fresh walks produced no co-occurrences")
    to_rows = _row_mapper(graph.node_ids)
    pos_centers = to_rows(observed.centers)
    pos_contexts = to_rows(observed.contexts)

    rng = derive_rng(seed, "eval-pairs")
    pick = rng.integers(0, len(observed), size=n_pairs)
    positives = np.stack([pos_centers[pick], pos_contexts[pick]], axis=1)

    seen = set(zip(pos_centers.tolist(), pos_contexts.tolist()))
    n = graph.n_nodes
    negatives = np.empty((n_pairs, 2), dtype=np.int64)
    filled = 0
    for _ in range(200):
        need = n_pairs - filled
        if need == 0:
            break
        a = rng.integers(0, n, size=2 * need + 8)
        b = rng.integers(0, n, size=2 * need + 8)
        for x, y in zip(a.tolist(), b.tolist()):
            if x == y or (x, y) in seen:
                continue
            negatives[filled] = (x, y)
            filled += 1
            if filled == n_pairs:
                break
    if filled < n_pairs:
        raise EmptyPairSet("could not find enough non-co-occurring pairs")
    return positives, negatives


def embedding_accuracy(
    vectors: np.ndarray | EmbeddingMatrix,
    positive_pairs: np.ndarray,
    negative_pairs: np.ndarray,
) -> float:
    """Balanced classification accuracy with the pooled-median threshold.

    A pair counts as predicted-positive iff its dot product exceeds the
    median dot product over positives and negatives pooled together.
    """
    if isinstance(vectors, EmbeddingMatrix):
        vectors = vectors.vectors
    positive_pairs = np.asarray(positive_pairs, dtype=np.int64)
    negative_pairs = np.asarray(negative_pairs, dtype=np.int64)
    if positive_pairs.size == 0 or negative_pairs.size == 0:
        raise EmptyPairSet("accuracy needs non-empty positive and negative pairs")
    if positive_pairs.shape != negative_pairs.shape:
        raise ValueError("positive and negative pair sets must be the same size")

    pos_scores = np.einsum(
        "bd,bd->b", vectors[positive_pairs[:, 0]], vectors[positive_pairs[:, 1]]
    )
    neg_scores = np.einsum(
        "bd,bd->b", vectors[negative_pairs[:, 0]], vectors[negative_pairs[:, 1]]
    )
    threshold = np.median(np.concatenate([pos_scores, neg_scores]))
    correct = int((pos_scores > threshold).sum()) + int((neg_scores <= threshold).sum())
    return correct / (len(pos_scores) + len(neg_scores))


def train_embedding(
    graph: SocialGraph,
    encoding: FeatureEncoding,
    walk_config: WalkConfig,
    config: EmbeddingConfig,
) -> EmbeddingMatrix:
    """Generate walks, extract co-occurrences, and fit the embedding by SGD.

    Per-epoch loss and held-out accuracy are recorded; identical inputs give
    an identical matrix. Raises DivergedTraining on NaN loss.
    """
    effective_graph, feature_matrix = prepare_mode_inputs(graph, encoding, config.mode)
    walks = generate_walks(effective_graph, walk_config)
    observed = co_occurrences(walks, walk_config.window)
    to_rows = _row_mapper(graph.node_ids)
    if len(observed) > 0:
        centers = to_rows(observed.centers)
        contexts = to_rows(observed.contexts)
    else:
        centers = np.zeros(0, dtype=np.int64)
        contexts = np.zeros(0, dtype=np.int64)

    try:
        eval_pos, eval_neg = build_held_out_pairs(
            graph, walk_config, config.eval_pairs, config.seed
        )
    except EmptyPairSet:
        eval_pos = eval_neg = None

    n = graph.n_nodes
    init_rng = derive_rng(config.seed, "init", config.mode)
    scale = 0.5 / config.dim
    if feature_matrix is None:
        params = init_rng.uniform(-scale, scale, size=(n, config.dim))
        feature_matrix_used = None
    else:
        params = init_rng.uniform(-scale, scale, size=(feature_matrix.shape[1], config.dim))
        feature_matrix_used = feature_matrix

    def current_vectors() -> np.ndarray:
        if feature_matrix_used is None:
            return params
        return feature_matrix_used @ params

    noise = _noise_distribution(contexts, n) if len(centers) else None
    factor = None if feature_matrix_used is None else _one_hot_factor(feature_matrix_used)
    loss_history: list[float] = []
    accuracy_history: list[float] = []

    for epoch in range(config.epochs):
        epoch_rng = derive_rng(config.seed, "epoch", config.mode, epoch)
        if len(centers) == 0:
            epoch_loss = 0.0
        elif config.negative_samples == 0:
            vectors = current_vectors()
            epoch_loss, grad = exact_loss_and_gradient(vectors, centers, contexts)
            # one dense fold per epoch is not a hot path; no factor needed
            _apply_update(
                params, grad, feature_matrix_used, config.learning_rate, len(centers)
            )
        else:
            perm = epoch_rng.permutation(len(centers))
            negatives = _draw_negatives(
                noise, epoch_rng, len(centers), config.negative_samples
            )
            epoch_loss = _sampled_epoch(
                params,
                feature_matrix_used,
                centers[perm],
                contexts[perm],
                negatives,
                config,
                factor,
            )
        if not np.isfinite(epoch_loss):
            raise DivergedTraining(f"loss diverged at epoch {epoch + 1}")
        loss_history.append(float(epoch_loss))
        if eval_pos is not None:
            accuracy_history.append(
                embedding_accuracy(current_vectors(), eval_pos, eval_neg)
            )
        else:
            accuracy_history.append(0.5)

    return EmbeddingMatrix(
        vectors=np.ascontiguousarray(current_vectors(), dtype=np.float64),
        mode=config.mode,
        seed=config.seed,
        loss_history=tuple(loss_history),
        accuracy_history=tuple(accuracy_history),
    )


def _apply_update(
    params: np.ndarray,
    grad_vectors: np.ndarray,
    feature_matrix: np.ndarray | None,
    lr: float,
    n_pairs: int,
    factor: _OneHotFactor | None = None,
) -> None:
    # losses are summed over pairs; the step uses the per-pair mean so the
    # learning rate keeps the same scale at any batch size
    step = lr / max(n_pairs, 1)
    if feature_matrix is None:
        params -= step * grad_vectors
    elif factor is not None:
        params -= step * factor.fold(grad_vectors)
    else:
        params -= step * (feature_matrix.T @ grad_vectors)


def _sampled_epoch(
    params: np.ndarray,
    feature_matrix: np.ndarray | None,
    centers: np.ndarray,
    contexts: np.ndarray,
    negatives: np.ndarray,
    config: EmbeddingConfig,
    factor: _OneHotFactor | None = None,
) -> float:
    m = len(centers)
    spans = [(s, min(s + config.batch_size, m)) for s in range(0, m, config.batch_size)]

    def span_vectors() -> np.ndarray:
        # parameters move after every span, so the factored modes must
        # refresh the node vectors span by span
        if feature_matrix is None:
            return params
        if factor is not None:
            return factor.expand(params)
        return feature_matrix @ params

    def run_span(span: tuple[int, int]) -> float:
        lo, hi = span
        loss, grad = sampled_loss_and_gradient(
            span_vectors(), centers[lo:hi], contexts[lo:hi], negatives[lo:hi]
        )
        _apply_update(
            params, grad, feature_matrix, config.learning_rate, hi - lo, factor
        )
        return loss

    if config.threads == 1 or len(spans) == 1:
        return sum(run_span(s) for s in spans)

    # lock-free asynchronous updates: shards race on the shared parameters,
    # which is tolerated; losses may differ run to run
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        return sum(pool.map(run_span, spans))


def save_embedding(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Binary vectors plus a JSON sidecar holding the training histories."""
    path = Path(path)
    header = _EMBED_MAGIC.pack(
        matrix.n_nodes, matrix.dim, _MODE_CODES[matrix.mode], matrix.seed
    )
    body = np.ascontiguousarray(matrix.vectors, dtype="<f8").tobytes()
    path.write_bytes(header + body)
    sidecar = {
        "n": matrix.n_nodes,
        "dim": matrix.dim,
        "mode": matrix.mode,
        "seed": matrix.seed,
        "loss_history": list(matrix.loss_history),
        "accuracy_history": list(matrix.accuracy_history),
    }
    Path(f"{path}.json").write_text(json.dumps(sidecar, sort_keys=True, indent=2))


def load_embedding(path: str | Path) -> EmbeddingMatrix:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _EMBED_MAGIC.size:
        raise ValueError("embedding file too short")
    n, dim, mode_code, seed = _EMBED_MAGIC.unpack_from(raw)
    if mode_code >= len(MODES):
        raise ValueError(f"unknown mode code {mode_code}")
    expected = _EMBED_MAGIC.size + n * dim * 8
    if len(raw) != expected:
        raise ValueError(f"expected {expected} bytes, found {len(raw)}")
    vectors = (
        np.frombuffer(raw, dtype="<f8", offset=_EMBED_MAGIC.size)
        .reshape(n, dim)
        .astype(np.float64)
    )
    loss_history: tuple[float, ...] = ()
    accuracy_history: tuple[float, ...] = ()
    sidecar_path = Path(f"{path}.json")
    if sidecar_path.exists():
        sidecar = json.loads(sidecar_path.read_text())
        loss_history = tuple(float(x) for x in sidecar.get("loss_history", []))
        accuracy_history = tuple(float(x) for x in sidecar.get("accuracy_history", []))
    return EmbeddingMatrix(
        vectors=vectors,
        mode=MODES[mode_code],
        seed=int(seed),
        loss_history=loss_history,
        accuracy_history=accuracy_history,
    )
