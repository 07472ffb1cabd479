"""Service discovery for Social IoT networks.

The package turns a device catalog plus an owner friendship network into
a social graph, embeds the devices with a skip-gram model under three
input modes, clusters the embedding space, and answers service requests
by combining characteristic distance with social hop distance.
"""

from .benchmarks import city_population, community_catalog, two_clique_catalog
from .catalog import (
    ATTRIBUTE_FIELDS,
    DeviceRecord,
    OwnerSocialNetwork,
    ingest_catalog,
    sample_subnetwork,
    synthesize_catalog,
)
from .clustering import ClusteringResult, KMeansConfig, assign_cluster, kmeans_fit
from .embedding import (
    ATTRIBUTES_ONLY,
    EDGES_AND_ATTRIBUTES,
    EDGES_ONLY,
    MODES,
    EmbeddingConfig,
    EmbeddingMatrix,
    embedding_accuracy,
    load_embedding,
    save_embedding,
    train_embedding,
)
from .errors import (
    AllUnreachable,
    DanglingOwner,
    DiscoveryError,
    DivergedTraining,
    DuplicateDeviceId,
    EmptyPairSet,
    InsufficientPopulation,
    MalformedRow,
    NoCandidates,
    TooFewPoints,
    UnknownDevice,
)
from .evaluation import (
    AggregateReport,
    ProtocolConfig,
    TrialReport,
    dimension_sweep,
    emit_report,
    run_monte_carlo,
    run_single_trial,
)
from .features import FeatureEncoding, ServiceRequest, encode_features, random_request
from .graph import (
    UNREACHABLE,
    Edge,
    SocialGraph,
    build_sfor_edges,
    graph_from_json,
    inject_fake_device,
    remove_device,
    shortest_path_distance,
    to_canonical_json,
)
from .lookup import (
    LookupResult,
    build_edges_pipeline,
    lookup_attributes_mode,
    lookup_edges_mode,
    lookup_full_mode,
    prepare_attributes_pipeline,
    prepare_full_pipeline,
)
from .rng import derive_rng, subseed
from .walks import CoOccurrenceSet, WalkConfig, co_occurrences, generate_walks

__version__ = "0.1.0"

__all__ = [
    "ATTRIBUTE_FIELDS",
    "ATTRIBUTES_ONLY",
    "AggregateReport",
    "AllUnreachable",
    "ClusteringResult",
    "CoOccurrenceSet",
    "DanglingOwner",
    "DeviceRecord",
    "DiscoveryError",
    "DivergedTraining",
    "DuplicateDeviceId",
    "EDGES_AND_ATTRIBUTES",
    "EDGES_ONLY",
    "Edge",
    "EmbeddingConfig",
    "EmbeddingMatrix",
    "EmptyPairSet",
    "FeatureEncoding",
    "InsufficientPopulation",
    "KMeansConfig",
    "LookupResult",
    "MODES",
    "MalformedRow",
    "NoCandidates",
    "OwnerSocialNetwork",
    "ProtocolConfig",
    "ServiceRequest",
    "SocialGraph",
    "TooFewPoints",
    "TrialReport",
    "UNREACHABLE",
    "UnknownDevice",
    "WalkConfig",
    "assign_cluster",
    "build_edges_pipeline",
    "build_sfor_edges",
    "city_population",
    "co_occurrences",
    "community_catalog",
    "derive_rng",
    "dimension_sweep",
    "embedding_accuracy",
    "emit_report",
    "encode_features",
    "generate_walks",
    "graph_from_json",
    "ingest_catalog",
    "inject_fake_device",
    "kmeans_fit",
    "load_embedding",
    "lookup_attributes_mode",
    "lookup_edges_mode",
    "lookup_full_mode",
    "prepare_attributes_pipeline",
    "prepare_full_pipeline",
    "random_request",
    "remove_device",
    "run_monte_carlo",
    "run_single_trial",
    "sample_subnetwork",
    "save_embedding",
    "shortest_path_distance",
    "subseed",
    "synthesize_catalog",
    "to_canonical_json",
    "train_embedding",
    "two_clique_catalog",
]
