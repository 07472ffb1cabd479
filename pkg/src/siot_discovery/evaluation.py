"""Monte Carlo evaluation of the three lookup strategies.

Each trial draws a fresh device sample, rebuilds the whole pipeline per
mode, answers a batch of randomized service requests, and records lookup
metrics plus the training accuracy trajectory. Everything a trial does is
derived from (master_seed, trial index), so reports are reproducible no
matter how trials are scheduled.
"""

from __future__ import annotations

import csv
import io
import json
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .catalog import DeviceRecord, OwnerSocialNetwork, sample_subnetwork
from .clustering import KMeansConfig
from .embedding import (
    ATTRIBUTES_ONLY,
    EDGES_AND_ATTRIBUTES,
    EDGES_ONLY,
    MODES,
    EmbeddingConfig,
)
from .errors import DiscoveryError
from .features import FeatureEncoding, ServiceRequest, encode_features, random_request
from .graph import SocialGraph, build_sfor_edges
from .lookup import (
    build_edges_pipeline,
    lookup_attributes_mode,
    lookup_edges_mode,
    lookup_full_mode,
    prepare_attributes_pipeline,
    prepare_full_pipeline,
)
from .rng import derive_rng
from .walks import WalkConfig

NOT_REACHED = None

CSV_HEADER = ["mode", "metric", "mean", "std", "trials"]
SCALAR_METRICS = (
    "candidate_count",
    "relation_similarity",
    "characteristic_similarity",
    "epochs_to_95",
    "final_accuracy",
)


def default_embed_configs(dim: int = 32, epochs: int = 20) -> dict[str, EmbeddingConfig]:
    return {
        mode: EmbeddingConfig(mode=mode, dim=dim, epochs=epochs)
        for mode in MODES
    }


@dataclass
class ProtocolConfig:
    sample_size: int = 933
    trials: int = 20
    queries_per_trial: int = 1
    master_seed: int = 0
    walk: WalkConfig = field(default_factory=WalkConfig)
    embed: dict[str, EmbeddingConfig] = field(default_factory=default_embed_configs)
    kmeans: KMeansConfig = field(default_factory=KMeansConfig)
    social_weight: float = 1.0
    accuracy_checkpoints: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.sample_size < 1 or self.trials < 1 or self.queries_per_trial < 1:
            raise ValueError("sample_size, trials, queries_per_trial must be >= 1")
        missing = [m for m in MODES if m not in self.embed]
        if missing:
            raise ValueError(f"missing embed configs for {missing}")

    def checkpoints(self) -> tuple[int, ...]:
        if self.accuracy_checkpoints:
            return self.accuracy_checkpoints
        epochs = max(cfg.epochs for cfg in self.embed.values())
        if epochs == 0:
            return ()
        marks = {1, max(1, epochs // 4), max(1, epochs // 2), epochs}
        return tuple(sorted(marks))

    def to_dict(self) -> dict:
        return {
            "sample_size": self.sample_size,
            "trials": self.trials,
            "queries_per_trial": self.queries_per_trial,
            "master_seed": self.master_seed,
            "walk": vars(self.walk).copy(),
            "embed": {m: vars(c).copy() for m, c in sorted(self.embed.items())},
            "kmeans": {
                "k": self.kmeans.k,
                "max_iterations": self.kmeans.max_iterations,
                "tolerance": self.kmeans.tolerance,
                "seed": self.kmeans.seed,
            },
            "social_weight": self.social_weight,
            "accuracy_checkpoints": list(self.checkpoints()),
        }


@dataclass
class TrialReport:
    trial: int
    mode: str
    seed: int
    epochs_to_95: int | None
    accuracy_at_epochs: dict[str, float]
    candidate_count: float | None
    relation_similarity: float | None
    characteristic_similarity: float | None
    final_accuracy: float | None
    failures: dict[str, int]
    wall_time: float

    def to_dict(self, include_timings: bool = False) -> dict:
        out = {
            "trial": self.trial,
            "mode": self.mode,
            "seed": self.seed,
            "epochs_to_95": self.epochs_to_95,
            "accuracy_at_epochs": self.accuracy_at_epochs,
            "candidate_count": self.candidate_count,
            "relation_similarity": self.relation_similarity,
            "characteristic_similarity": self.characteristic_similarity,
            "final_accuracy": self.final_accuracy,
            "failures": dict(sorted(self.failures.items())),
        }
        if include_timings:
            out["wall_time"] = self.wall_time
        return out


@dataclass
class AggregateReport:
    protocol: dict
    modes: dict[str, dict[str, dict[str, float | int | None]]]
    failures: dict[str, dict[str, int]]
    trial_reports: list[TrialReport]

    def to_dict(self, include_timings: bool = False) -> dict:
        return {
            "protocol": self.protocol,
            "modes": self.modes,
            "failures": self.failures,
            "trials": [t.to_dict(include_timings) for t in self.trial_reports],
        }


def hop_distances(graph: SocialGraph, source: int, targets: Iterable[int]) -> dict[int, float]:
    """Breadth-first hop counts; unreachable targets get infinity."""
    wanted = set(targets)
    dist: dict[int, int] = {source: 0}
    frontier = [source]
    remaining = set(wanted) - {source}
    while frontier and remaining:
        nxt: list[int] = []
        for node in frontier:
            for nbr, _ in graph.neighbors(node):
                if nbr not in dist:
                    dist[nbr] = dist[node] + 1
                    remaining.discard(nbr)
                    nxt.append(nbr)
        frontier = nxt
    return {t: float(dist[t]) if t in dist else float("inf") for t in wanted}


def relation_similarity(
    graph: SocialGraph, requester: int, candidates: Sequence[int]
) -> float:
    """Mean of 100/(1 + hops); unreachable candidates contribute 0."""
    if not candidates:
        raise ValueError("relation similarity needs at least one candidate")
    hops = hop_distances(graph, requester, candidates)
    vals = [
        100.0 / (1.0 + hops[c]) if np.isfinite(hops[c]) else 0.0 for c in candidates
    ]
    return float(np.mean(vals))


def characteristic_similarity(
    encoding: FeatureEncoding, candidates: Sequence[int], required: np.ndarray
) -> float:
    """Mean percentage of attribute blocks matching the requested profile."""
    if not candidates:
        raise ValueError("characteristic similarity needs at least one candidate")
    n_blocks = len(encoding.vocabularies)
    vals = [
        100.0 * encoding.matching_blocks(encoding.row_for(c), required) / n_blocks
        for c in candidates
    ]
    return float(np.mean(vals))


def epochs_to_accuracy(
    history: Sequence[float], threshold: float = 0.95, relative: bool = True
) -> int | None:
    """First epoch (1-based) at or above the threshold.

    With ``relative=True`` the threshold is a fraction of the run's own
    plateau (its maximum accuracy), i.e. epochs until the curve has
    essentially converged. Returns None when never reached.
    """
    if len(history) == 0:
        return NOT_REACHED
    target = threshold * max(history) if relative else threshold
    for epoch, acc in enumerate(history, start=1):
        if acc >= target:
            return epoch
    return NOT_REACHED


def _mode_seed(master_seed: int, trial: int, tag: str) -> int:
    return int(derive_rng(master_seed, "trial", trial, tag).integers(2**62))


def run_single_trial(
    catalog: Sequence[DeviceRecord],
    owners: OwnerSocialNetwork,
    protocol: ProtocolConfig,
    trial: int,
) -> list[TrialReport]:
    """One full pipeline pass for every mode; never raises on lookup errors."""
    master = protocol.master_seed
    trial_seed = _mode_seed(master, trial, "seed")
    sample, sub_owners = sample_subnetwork(
        catalog, owners, protocol.sample_size, seed=_mode_seed(master, trial, "sample")
    )
    graph = build_sfor_edges(sample, sub_owners)
    encoding = encode_features(sample)
    qrng = derive_rng(master, "trial", trial, "requests")
    requests = tuple(
        random_request(encoding, qrng) for _ in range(protocol.queries_per_trial)
    )
    walk_cfg = replace(protocol.walk, seed=_mode_seed(master, trial, "walk"))
    checkpoints = protocol.checkpoints()

    reports: list[TrialReport] = []
    for mode in MODES:
        start = time.perf_counter()
        embed_cfg = replace(
            protocol.embed[mode],
            mode=mode,
            seed=_mode_seed(master, trial, f"embed-{mode}"),
        )
        kmeans_cfg = replace(
            protocol.kmeans, seed=_mode_seed(master, trial, f"kmeans-{mode}")
        )
        failures: Counter[str] = Counter()
        try:
            if mode == EDGES_ONLY:
                pipeline = build_edges_pipeline(
                    graph, encoding, walk_cfg, embed_cfg, kmeans_cfg
                )
                run_query = lookup_edges_mode
            elif mode == ATTRIBUTES_ONLY:
                pipeline = prepare_attributes_pipeline(
                    graph, encoding, requests, walk_cfg, embed_cfg, kmeans_cfg
                )
                run_query = lookup_attributes_mode
            else:
                pipeline = prepare_full_pipeline(
                    graph, encoding, requests, walk_cfg, embed_cfg, kmeans_cfg,
                    social_weight=protocol.social_weight,
                )
                run_query = lookup_full_mode
        except DiscoveryError as err:
            failures[type(err).__name__] += 1
            reports.append(
                TrialReport(
                    trial=trial, mode=mode, seed=trial_seed,
                    epochs_to_95=NOT_REACHED, accuracy_at_epochs={},
                    candidate_count=None, relation_similarity=None,
                    characteristic_similarity=None, final_accuracy=None,
                    failures=dict(failures),
                    wall_time=time.perf_counter() - start,
                )
            )
            continue

        sizes: list[float] = []
        rels: list[float] = []
        chars: list[float] = []
        for request in requests:
            try:
                result = run_query(pipeline, request)
            except DiscoveryError as err:
                failures[type(err).__name__] += 1
                continue
            sizes.append(float(len(result.candidates)))
            rels.append(
                relation_similarity(graph, request.requester_id, result.candidates)
            )
            chars.append(
                characteristic_similarity(
                    encoding, result.candidates, request.required_features
                )
            )

        history = pipeline.embedding.accuracy_history
        at_epochs = {
            str(e): history[e - 1] for e in checkpoints if 1 <= e <= len(history)
        }
        reports.append(
            TrialReport(
                trial=trial,
                mode=mode,
                seed=trial_seed,
                epochs_to_95=epochs_to_accuracy(history),
                accuracy_at_epochs=at_epochs,
                candidate_count=float(np.mean(sizes)) if sizes else None,
                relation_similarity=float(np.mean(rels)) if rels else None,
                characteristic_similarity=float(np.mean(chars)) if chars else None,
                final_accuracy=history[-1] if history else None,
                failures=dict(failures),
                wall_time=time.perf_counter() - start,
            )
        )
    return reports


def run_monte_carlo(
    catalog: Sequence[DeviceRecord],
    owners: OwnerSocialNetwork,
    protocol: ProtocolConfig,
    threads: int = 1,
) -> AggregateReport:
    """Run all trials and aggregate per-mode metric means and deviations."""
    if threads < 1:
        raise ValueError("threads must be >= 1")
    trials = list(range(protocol.trials))
    if threads == 1:
        batches = [run_single_trial(catalog, owners, protocol, t) for t in trials]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            batches = list(
                pool.map(lambda t: run_single_trial(catalog, owners, protocol, t), trials)
            )

    trial_reports = [r for batch in batches for r in batch]
    modes: dict[str, dict[str, dict[str, float | int | None]]] = {}
    failures: dict[str, dict[str, int]] = {}
    for mode in MODES:
        of_mode = [r for r in trial_reports if r.mode == mode]
        modes[mode] = {}
        for metric in SCALAR_METRICS:
            values = [
                float(getattr(r, metric))
                for r in of_mode
                if getattr(r, metric) is not None
            ]
            modes[mode][metric] = {
                "mean": float(np.mean(values)) if values else None,
                "std": float(np.std(values)) if values else None,
                "trials": len(values),
            }
        fail_counter: Counter[str] = Counter()
        for r in of_mode:
            fail_counter.update(r.failures)
        failures[mode] = dict(sorted(fail_counter.items()))

    return AggregateReport(
        protocol=protocol.to_dict(),
        modes=modes,
        failures=failures,
        trial_reports=trial_reports,
    )


def emit_report(
    report: AggregateReport | Mapping,
    fmt: str = "json",
    include_timings: bool = False,
) -> str:
    """Serialize a report; timings are informational and off by default so
    identical protocols give byte-identical output."""
    payload = (
        report.to_dict(include_timings)
        if isinstance(report, AggregateReport)
        else dict(report)
    )
    if fmt == "json":
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for mode in sorted(payload["modes"]):
            for metric in sorted(payload["modes"][mode]):
                cell = payload["modes"][mode][metric]
                writer.writerow(
                    [
                        mode,
                        metric,
                        "" if cell["mean"] is None else repr(cell["mean"]),
                        "" if cell["std"] is None else repr(cell["std"]),
                        cell["trials"],
                    ]
                )
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


def report_from_json(text: str) -> dict:
    return json.loads(text)


def dimension_sweep(
    dims: Sequence[int],
    catalog: Sequence[DeviceRecord],
    owners: OwnerSocialNetwork,
    master_seed: int = 0,
    walk: WalkConfig | None = None,
    epochs: int = 30,
    negative_samples: int = 5,
) -> list[dict]:
    """Train each mode at each dimension on one fixed benchmark graph.

    Returns rows of {mode, dim, final_accuracy, epochs_to_95}. Rejects an
    empty or non-positive dimension list.
    """
    from .embedding import train_embedding

    dims = [int(d) for d in dims]
    if not dims or any(d < 1 for d in dims):
        raise ValueError("dims must be a non-empty list of positive integers")
    graph = build_sfor_edges(catalog, owners)
    encoding = encode_features(catalog)
    walk_cfg = walk if walk is not None else WalkConfig(
        walks_per_node=6, walk_length=12, window=4
    )
    walk_cfg = replace(walk_cfg, seed=_mode_seed(master_seed, 0, "sweep-walk"))

    rows: list[dict] = []
    for dim in dims:
        for mode in MODES:
            cfg = EmbeddingConfig(
                mode=mode,
                dim=dim,
                epochs=epochs,
                negative_samples=negative_samples,
                seed=_mode_seed(master_seed, dim, f"sweep-{mode}"),
            )
            matrix = train_embedding(graph, encoding, walk_cfg, cfg)
            rows.append(
                {
                    "mode": mode,
                    "dim": dim,
                    "final_accuracy": matrix.accuracy_history[-1]
                    if matrix.accuracy_history
                    else None,
                    "epochs_to_95": epochs_to_accuracy(matrix.accuracy_history),
                }
            )
    return rows


def sweep_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["mode", "dim", "final_accuracy", "epochs_to_95"])
    for row in rows:
        writer.writerow(
            [
                row["mode"],
                row["dim"],
                "" if row["final_accuracy"] is None else repr(row["final_accuracy"]),
                "" if row["epochs_to_95"] is None else row["epochs_to_95"],
            ]
        )
    return buf.getvalue()
