"""Cluster-scoped service lookup.

Three strategies share one shape: embed, cluster, then search only the
cluster that contains the probe.

* ``edges_only``: candidates are the requester's own cluster; pick the
  feature-nearest device.
* ``attributes_only``: an isolated fake device carrying the requested
  profile is injected, the embedding is retrained on the augmented graph,
  and the fake's cluster is searched for the socially closest device
  (distances measured in the original graph).
* ``full``: the fake also copies the requester's edges; candidates are
  ranked by characteristic distance plus ``social_weight`` times social
  distance, both min-max normalized over the candidate set.

Because fake-node embeddings require retraining per query, the preparation
step accepts a batch of requests and injects all fakes at once.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .clustering import ClusteringResult, KMeansConfig, assign_cluster, kmeans_fit
from .embedding import (
    ATTRIBUTES_ONLY,
    EDGES_AND_ATTRIBUTES,
    EDGES_ONLY,
    EmbeddingConfig,
    EmbeddingMatrix,
    train_embedding,
)
from .errors import AllUnreachable, NoCandidates, UnknownDevice
from .features import FeatureEncoding, ServiceRequest
from .graph import UNREACHABLE, SocialGraph, inject_fake_device, shortest_path_distance
from .walks import WalkConfig

EDGES_STRATEGY = "edges_only"
ATTRIBUTES_STRATEGY = "attributes_only"
FULL_STRATEGY = "full"
STRATEGIES = (EDGES_STRATEGY, ATTRIBUTES_STRATEGY, FULL_STRATEGY)


@dataclass(frozen=True)
class LookupResult:
    mode: str
    selected_device: int
    candidates: tuple[int, ...]
    characteristic_distance: dict[int, float]
    social_distance: dict[int, float]
    cluster: int


@dataclass(frozen=True)
class ModePipeline:
    """Trained state a lookup strategy runs against."""

    strategy: str
    graph: SocialGraph
    encoding: FeatureEncoding
    aug_graph: SocialGraph
    aug_encoding: FeatureEncoding
    embedding: EmbeddingMatrix
    clustering: ClusteringResult
    requests: tuple[ServiceRequest, ...]
    fake_ids: tuple[int, ...]
    social_weight: float = 1.0


def build_edges_pipeline(
    graph: SocialGraph,
    encoding: FeatureEncoding,
    walk_config: WalkConfig,
    embed_config: EmbeddingConfig,
    kmeans_config: KMeansConfig,
) -> ModePipeline:
    """Train once on the unmodified graph; reusable across requests."""
    if embed_config.mode != EDGES_ONLY:
        embed_config = replace(embed_config, mode=EDGES_ONLY)
    embedding = train_embedding(graph, encoding, walk_config, embed_config)
    clustering = kmeans_fit(embedding.vectors, kmeans_config)
    return ModePipeline(
        strategy=EDGES_STRATEGY,
        graph=graph,
        encoding=encoding,
        aug_graph=graph,
        aug_encoding=encoding,
        embedding=embedding,
        clustering=clustering,
        requests=(),
        fake_ids=(),
    )


def _prepare_fake_pipeline(
    graph: SocialGraph,
    encoding: FeatureEncoding,
    requests: tuple[ServiceRequest, ...],
    walk_config: WalkConfig,
    embed_config: EmbeddingConfig,
    kmeans_config: KMeansConfig,
    strategy: str,
    social_weight: float,
) -> ModePipeline:
    aug_graph, aug_encoding = graph, encoding
    fake_ids: list[int] = []
    for request in requests:
        request.validated_against(encoding)
        copy_of = request.requester_id if strategy == FULL_STRATEGY else None
        aug_graph, aug_encoding, fake_id = inject_fake_device(
            aug_graph, aug_encoding, request.required_features, copy_of
        )
        fake_ids.append(fake_id)
    embedding = train_embedding(aug_graph, aug_encoding, walk_config, embed_config)
    clustering = kmeans_fit(embedding.vectors, kmeans_config)
    return ModePipeline(
        strategy=strategy,
        graph=graph,
        encoding=encoding,
        aug_graph=aug_graph,
        aug_encoding=aug_encoding,
        embedding=embedding,
        clustering=clustering,
        requests=tuple(requests),
        fake_ids=tuple(fake_ids),
        social_weight=social_weight,
    )


def prepare_attributes_pipeline(
    graph: SocialGraph,
    encoding: FeatureEncoding,
    requests: tuple[ServiceRequest, ...] | list[ServiceRequest],
    walk_config: WalkConfig,
    embed_config: EmbeddingConfig,
    kmeans_config: KMeansConfig,
) -> ModePipeline:
    """Inject one isolated fake per request and retrain in attributes mode."""
    if embed_config.mode != ATTRIBUTES_ONLY:
        embed_config = replace(embed_config, mode=ATTRIBUTES_ONLY)
    return _prepare_fake_pipeline(
        graph, encoding, tuple(requests), walk_config, embed_config,
        kmeans_config, ATTRIBUTES_STRATEGY, 1.0,
    )


def prepare_full_pipeline(
    graph: SocialGraph,
    encoding: FeatureEncoding,
    requests: tuple[ServiceRequest, ...] | list[ServiceRequest],
    walk_config: WalkConfig,
    embed_config: EmbeddingConfig,
    kmeans_config: KMeansConfig,
    social_weight: float = 1.0,
) -> ModePipeline:
    """Fakes copy their requester's relations; retrain with both inputs."""
    if embed_config.mode != EDGES_AND_ATTRIBUTES:
        embed_config = replace(embed_config, mode=EDGES_AND_ATTRIBUTES)
    return _prepare_fake_pipeline(
        graph, encoding, tuple(requests), walk_config, embed_config,
        kmeans_config, FULL_STRATEGY, social_weight,
    )


def _request_slot(pipeline: ModePipeline, request: ServiceRequest) -> int:
    for i, r in enumerate(pipeline.requests):
        if r is request:
            return i
    raise ValueError("request was not part of this pipeline's preparation batch")


def _cluster_candidates(
    pipeline: ModePipeline, probe_device: int, exclude: set[int]
) -> tuple[int, list[int]]:
    row = pipeline.aug_graph.node_index(probe_device)
    cluster = int(pipeline.clustering.assignments[row])
    ids = pipeline.aug_graph.node_ids
    members = [
        ids[int(r)]
        for r in pipeline.clustering.members(cluster)
        if ids[int(r)] not in exclude
    ]
    if not members:
        raise NoCandidates(f"cluster {cluster} holds no eligible device")
    return cluster, members


def _characteristic_distances(
    encoding: FeatureEncoding, candidates: list[int], required: np.ndarray
) -> dict[int, float]:
    return {
        c: float(np.linalg.norm(encoding.row_for(c) - required)) for c in candidates
    }


def _social_distances(
    graph: SocialGraph, requester: int, candidates: list[int]
) -> dict[int, float]:
    return shortest_path_distance(graph, requester, candidates)


def lookup_edges_mode(pipeline: ModePipeline, request: ServiceRequest) -> LookupResult:
    """Search the requester's cluster for the feature-nearest device."""
    if pipeline.strategy != EDGES_STRATEGY:
        raise ValueError(f"pipeline was prepared for {pipeline.strategy}")
    request.validated_against(pipeline.encoding)
    if not pipeline.graph.has_node(request.requester_id):
        raise UnknownDevice(f"requester {request.requester_id} not in graph")
    cluster, candidates = _cluster_candidates(
        pipeline, request.requester_id, {request.requester_id}
    )
    char = _characteristic_distances(
        pipeline.encoding, candidates, request.required_features
    )
    social = _social_distances(pipeline.graph, request.requester_id, candidates)
    selected = min(candidates, key=lambda c: (char[c], c))
    return LookupResult(
        mode=EDGES_STRATEGY,
        selected_device=selected,
        candidates=tuple(sorted(candidates)),
        characteristic_distance=char,
        social_distance=social,
        cluster=cluster,
    )


def lookup_attributes_mode(
    pipeline: ModePipeline, request: ServiceRequest
) -> LookupResult:
    """Search the fake's cluster for the socially closest device."""
    if pipeline.strategy != ATTRIBUTES_STRATEGY:
        raise ValueError(f"pipeline was prepared for {pipeline.strategy}")
    slot = _request_slot(pipeline, request)
    fake = pipeline.fake_ids[slot]
    exclude = set(pipeline.fake_ids) | {request.requester_id}
    cluster, candidates = _cluster_candidates(pipeline, fake, exclude)
    char = _characteristic_distances(
        pipeline.encoding, candidates, request.required_features
    )
    social = _social_distances(pipeline.graph, request.requester_id, candidates)
    if all(social[c] == UNREACHABLE for c in candidates):
        raise AllUnreachable("no candidate is connected to the requester")
    selected = min(candidates, key=lambda c: (social[c], char[c], c))
    return LookupResult(
        mode=ATTRIBUTES_STRATEGY,
        selected_device=selected,
        candidates=tuple(sorted(candidates)),
        characteristic_distance=char,
        social_distance=social,
        cluster=cluster,
    )


def combined_scores(
    char: dict[int, float],
    social: dict[int, float],
    candidates: list[int],
    social_weight: float,
) -> dict[int, float]:
    """Min-max normalized characteristic + weighted social score.

    Finite social distances normalize to [0, 1]; unreachable candidates get
    a fixed 2.0 so they rank after every reachable one. A degenerate term
    (all candidates equal) normalizes to 0.
    """
    cvals = np.array([char[c] for c in candidates])
    c_lo, c_hi = float(cvals.min()), float(cvals.max())
    finite = [social[c] for c in candidates if social[c] != UNREACHABLE]
    s_lo, s_hi = (min(finite), max(finite)) if finite else (0.0, 0.0)

    out: dict[int, float] = {}
    for c in candidates:
        c_norm = 0.0 if c_hi == c_lo else (char[c] - c_lo) / (c_hi - c_lo)
        if social[c] == UNREACHABLE:
            s_norm = 2.0
        elif s_hi == s_lo:
            s_norm = 0.0
        else:
            s_norm = (social[c] - s_lo) / (s_hi - s_lo)
        out[c] = c_norm + social_weight * s_norm
    return out


def lookup_full_mode(pipeline: ModePipeline, request: ServiceRequest) -> LookupResult:
    """Search the fake's cluster ranking by the combined normalized score."""
    if pipeline.strategy != FULL_STRATEGY:
        raise ValueError(f"pipeline was prepared for {pipeline.strategy}")
    slot = _request_slot(pipeline, request)
    fake = pipeline.fake_ids[slot]
    exclude = set(pipeline.fake_ids) | {request.requester_id}
    cluster, candidates = _cluster_candidates(pipeline, fake, exclude)
    char = _characteristic_distances(
        pipeline.encoding, candidates, request.required_features
    )
    social = _social_distances(pipeline.graph, request.requester_id, candidates)
    scores = combined_scores(char, social, candidates, pipeline.social_weight)
    selected = min(candidates, key=lambda c: (scores[c], c))
    return LookupResult(
        mode=FULL_STRATEGY,
        selected_device=selected,
        candidates=tuple(sorted(candidates)),
        characteristic_distance=char,
        social_distance=social,
        cluster=cluster,
    )


def lookup_result_to_dict(result: LookupResult) -> dict:
    """JSON-safe form; unreachable social distances become null."""
    return {
        "mode": result.mode,
        "selected_device": result.selected_device,
        "cluster": result.cluster,
        "candidates": list(result.candidates),
        "scores": {
            str(c): {
                "characteristic_distance": result.characteristic_distance[c],
                "social_distance": (
                    None
                    if result.social_distance[c] == UNREACHABLE
                    else result.social_distance[c]
                ),
            }
            for c in result.candidates
        },
    }
