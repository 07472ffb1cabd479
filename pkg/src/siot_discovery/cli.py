"""Command line entry points.

Subcommands: synth | ingest | embed | cluster | lookup | eval | sweep.
A JSON config file can predefine any flag (underscored names); explicit
flags win. Exit codes: 0 ok, 2 usage or config error, 3 empty result,
4 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .benchmarks import community_catalog
from .catalog import (
    ingest_catalog,
    sample_subnetwork,
    synthesize_catalog,
    write_device_csv,
    write_friendship_csv,
)
from .clustering import KMeansConfig, clustering_to_json, kmeans_fit
from .embedding import (
    ATTRIBUTES_ONLY,
    EDGES_AND_ATTRIBUTES,
    EDGES_ONLY,
    EmbeddingConfig,
    load_embedding,
    save_embedding,
    train_embedding,
)
from .errors import (
    AllUnreachable,
    DiscoveryError,
    DivergedTraining,
    NoCandidates,
)
from .evaluation import (
    ProtocolConfig,
    default_embed_configs,
    dimension_sweep,
    emit_report,
    run_monte_carlo,
    sweep_to_csv,
)
from .features import ServiceRequest, encode_features
from .graph import build_sfor_edges, to_canonical_json
from .lookup import (
    build_edges_pipeline,
    lookup_attributes_mode,
    lookup_edges_mode,
    lookup_full_mode,
    lookup_result_to_dict,
    prepare_attributes_pipeline,
    prepare_full_pipeline,
)
from .walks import WalkConfig

log = logging.getLogger("siot_discovery")

_LOOKUP_MODES = {
    "edges": EDGES_ONLY,
    "attributes": ATTRIBUTES_ONLY,
    "full": EDGES_AND_ATTRIBUTES,
}

USAGE_ERROR = 2
EMPTY_RESULT = 3
DATA_ERROR = 4


def _csv_ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")


def _add_out(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", required=True, help="output directory")


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, required=True, help="master seed (mandatory)")


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--devices", help="device CSV path")
    p.add_argument("--friendships", help="friendship CSV path")


def _add_walk_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--walks-per-node", type=int, default=10)
    p.add_argument("--walk-length", type=int, default=20)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--return-param", type=float, default=1.0)
    p.add_argument("--inout-param", type=float, default=1.0)


def _add_embed_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--learning-rate", type=float, default=0.025)
    p.add_argument("--negative-samples", type=int, default=5)
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="siot-discovery",
        description="Social-IoT service discovery pipeline",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON file of flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic catalog")
    synth.add_argument("--private", type=int, default=14600)
    synth.add_argument("--public", type=int, default=1616)
    synth.add_argument("--owners", type=int, default=4000)
    synth.add_argument("--vocab", type=_csv_ints, default=[10, 20, 2, 2])
    synth.add_argument("--friendship-prob", type=float, default=0.01)
    _add_seed(synth)
    _add_out(synth)

    ingest = sub.add_parser("ingest", help="validate CSVs, write canonical graph")
    _add_data_args(ingest)
    _add_out(ingest)

    embed = sub.add_parser("embed", help="train one embedding mode")
    _add_data_args(embed)
    embed.add_argument(
        "--mode", choices=sorted(_LOOKUP_MODES), default="full"
    )
    _add_walk_args(embed)
    _add_embed_args(embed)
    _add_seed(embed)
    _add_out(embed)

    cluster = sub.add_parser("cluster", help="k-means over a saved embedding")
    cluster.add_argument("--embedding", required=True, help="embedding binary path")
    cluster.add_argument("--k", type=int, default=None)
    cluster.add_argument("--max-iterations", type=int, default=100)
    cluster.add_argument("--tolerance", type=float, default=1e-6)
    _add_seed(cluster)
    _add_out(cluster)

    lookup = sub.add_parser("lookup", help="answer one service request")
    _add_data_args(lookup)
    lookup.add_argument("--mode", choices=sorted(_LOOKUP_MODES), required=True)
    lookup.add_argument("--requester", type=int, required=True)
    lookup.add_argument(
        "--require",
        required=True,
        help="requested profile, e.g. device_type=type03,brand=brand01,"
        "mobility=static,power_supply=battery",
    )
    lookup.add_argument("--social-weight", type=float, default=1.0)
    lookup.add_argument("--k", type=int, default=None)
    _add_walk_args(lookup)
    _add_embed_args(lookup)
    _add_seed(lookup)
    _add_out(lookup)

    ev = sub.add_parser("eval", help="Monte Carlo evaluation of all modes")
    _add_data_args(ev)
    ev.add_argument("--synth-private", type=int, default=14600)
    ev.add_argument("--synth-public", type=int, default=0)
    ev.add_argument("--synth-owners", type=int, default=4000)
    ev.add_argument("--synth-vocab", type=_csv_ints, default=[10, 20, 2, 2])
    ev.add_argument("--synth-friendship-prob", type=float, default=0.0007)
    ev.add_argument("--sample-size", type=int, default=933)
    ev.add_argument("--trials", type=int, default=20)
    ev.add_argument("--queries-per-trial", type=int, default=1)
    ev.add_argument("--k", type=int, default=None)
    ev.add_argument("--social-weight", type=float, default=1.0)
    _add_walk_args(ev)
    _add_embed_args(ev)
    _add_seed(ev)
    _add_out(ev)

    sweep = sub.add_parser("sweep", help="accuracy across embedding dimensions")
    _add_data_args(sweep)
    sweep.add_argument("--dims", type=_csv_ints, required=True)
    sweep.add_argument("--epochs", type=int, default=30)
    sweep.add_argument("--negative-samples", type=int, default=5)
    _add_seed(sweep)
    _add_out(sweep)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Pull --config out of argv and turn its entries into parser defaults."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        parser.error("--config needs a path")
    path = argv[at + 1]
    rest = argv[:at] + argv[at + 2 :]
    try:
        loaded = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        parser.error(f"cannot read config {path}: {err}")
    if not isinstance(loaded, dict):
        parser.error("config must be a JSON object")
    known = _known_dests(parser)
    for key in loaded:
        if key not in known:
            parser.error(f"unknown config key {key!r}")
    # subcommands parse into a fresh namespace, so defaults must be set on
    # every subparser that owns the dest, not just on the top-level parser
    parser.set_defaults(**{k: v for k, v in loaded.items()
                           if k in {a.dest for a in parser._actions}})
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for p in action.choices.values():
                mine = {a.dest for a in p._actions}
                fit = {k: v for k, v in loaded.items() if k in mine}
                if fit:
                    p.set_defaults(**fit)
    return rest


def _known_dests(parser: argparse.ArgumentParser) -> set[str]:
    dests = {a.dest for a in parser._actions}
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for p in action.choices.values():
                dests |= {a.dest for a in p._actions}
    return dests


def _ensure_out(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, files: list[Path]) -> None:
    digest = {}
    for f in sorted(files):
        digest[f.name] = "sha256:" + hashlib.sha256(f.read_bytes()).hexdigest()
    (out / "manifest.json").write_text(
        json.dumps({"files": digest}, sort_keys=True, indent=2) + "\n"
    )


def _load_inputs(args: argparse.Namespace):
    if not args.devices:
        raise ValueError("--devices is required for this command")
    return ingest_catalog(args.devices, args.friendships)


def _walk_config(args: argparse.Namespace, seed: int) -> WalkConfig:
    return WalkConfig(
        walks_per_node=args.walks_per_node,
        walk_length=args.walk_length,
        window=args.window,
        return_param=args.return_param,
        inout_param=args.inout_param,
        seed=seed,
    )


def _embed_config(args: argparse.Namespace, mode: str, seed: int) -> EmbeddingConfig:
    return EmbeddingConfig(
        mode=mode,
        dim=args.dim,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        negative_samples=args.negative_samples,
        threads=args.threads,
        seed=seed,
    )


def _parse_profile(text: str) -> dict[str, str]:
    profile = {}
    for chunk in text.split(","):
        if "=" not in chunk:
            raise ValueError(f"bad profile chunk {chunk!r}, want key=value")
        key, value = chunk.split("=", 1)
        profile[key.strip()] = value.strip()
    return profile


def cmd_synth(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    catalog, owners = synthesize_catalog(
        args.private, args.public, args.owners, args.vocab,
        args.friendship_prob, args.seed,
    )
    dev_path = out / "devices.csv"
    fr_path = out / "friendships.csv"
    write_device_csv(catalog, dev_path)
    write_friendship_csv(owners, fr_path)
    _write_manifest(out, [dev_path, fr_path])
    log.info("wrote %d devices, %d friendships", len(catalog), len(owners.friendships))
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    catalog, owners = _load_inputs(args)
    graph = build_sfor_edges(catalog, owners)
    graph_path = out / "graph.json"
    graph_path.write_text(to_canonical_json(graph) + "\n")
    summary = {
        "devices": len(catalog),
        "private": sum(1 for r in catalog if r.is_private),
        "owners": len(owners.owners),
        "friendships": len(owners.friendships),
        "edges": graph.n_edges,
    }
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    _write_manifest(out, [graph_path, summary_path])
    return 0


def cmd_embed(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    catalog, owners = _load_inputs(args)
    graph = build_sfor_edges(catalog, owners)
    encoding = encode_features(catalog)
    mode = _LOOKUP_MODES[args.mode]
    matrix = train_embedding(
        graph,
        encoding,
        _walk_config(args, args.seed),
        _embed_config(args, mode, args.seed),
    )
    path = out / "embedding.bin"
    save_embedding(matrix, path)
    _write_manifest(out, [path, Path(f"{path}.json")])
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    matrix = load_embedding(args.embedding)
    result = kmeans_fit(
        matrix.vectors,
        KMeansConfig(
            k=args.k,
            max_iterations=args.max_iterations,
            tolerance=args.tolerance,
            seed=args.seed,
        ),
    )
    path = out / "clusters.json"
    path.write_text(clustering_to_json(result) + "\n")
    _write_manifest(out, [path])
    return 0


def cmd_lookup(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    catalog, owners = _load_inputs(args)
    graph = build_sfor_edges(catalog, owners)
    encoding = encode_features(catalog)
    profile = _parse_profile(args.require)
    request = ServiceRequest(
        requester_id=args.requester,
        required_features=encoding.encode_values(profile),
    ).validated_against(encoding)

    walk_cfg = _walk_config(args, args.seed)
    kmeans_cfg = KMeansConfig(k=args.k, seed=args.seed)
    mode = _LOOKUP_MODES[args.mode]
    if mode == EDGES_ONLY:
        pipeline = build_edges_pipeline(
            graph, encoding, walk_cfg, _embed_config(args, mode, args.seed), kmeans_cfg
        )
        result = lookup_edges_mode(pipeline, request)
    elif mode == ATTRIBUTES_ONLY:
        pipeline = prepare_attributes_pipeline(
            graph, encoding, (request,), walk_cfg,
            _embed_config(args, mode, args.seed), kmeans_cfg,
        )
        result = lookup_attributes_mode(pipeline, request)
    else:
        pipeline = prepare_full_pipeline(
            graph, encoding, (request,), walk_cfg,
            _embed_config(args, mode, args.seed), kmeans_cfg,
            social_weight=args.social_weight,
        )
        result = lookup_full_mode(pipeline, request)

    path = out / "lookup.json"
    path.write_text(json.dumps(lookup_result_to_dict(result), sort_keys=True, indent=2) + "\n")
    _write_manifest(out, [path])
    print(json.dumps(lookup_result_to_dict(result), sort_keys=True))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    if args.devices:
        catalog, owners = _load_inputs(args)
    else:
        catalog, owners = synthesize_catalog(
            args.synth_private, args.synth_public, args.synth_owners,
            args.synth_vocab, args.synth_friendship_prob, args.seed,
        )
    embed = {
        mode: _embed_config(args, mode, 0)
        for mode in default_embed_configs()
    }
    protocol = ProtocolConfig(
        sample_size=args.sample_size,
        trials=args.trials,
        queries_per_trial=args.queries_per_trial,
        master_seed=args.seed,
        walk=_walk_config(args, 0),
        embed=embed,
        kmeans=KMeansConfig(k=args.k),
        social_weight=args.social_weight,
    )
    report = run_monte_carlo(catalog, owners, protocol, threads=args.threads)
    json_path = out / "report.json"
    csv_path = out / "report.csv"
    json_path.write_text(emit_report(report, "json"))
    csv_path.write_text(emit_report(report, "csv"))
    _write_manifest(out, [json_path, csv_path])
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    if args.devices:
        catalog, owners = _load_inputs(args)
    else:
        catalog, owners = community_catalog(seed=args.seed)
    rows = dimension_sweep(
        args.dims, catalog, owners,
        master_seed=args.seed,
        epochs=args.epochs,
        negative_samples=args.negative_samples,
    )
    csv_path = out / "sweep.csv"
    csv_path.write_text(sweep_to_csv(rows))
    json_path = out / "sweep.json"
    json_path.write_text(json.dumps(rows, sort_keys=True, indent=2) + "\n")
    _write_manifest(out, [csv_path, json_path])
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "embed": cmd_embed,
    "cluster": cmd_cluster,
    "lookup": cmd_lookup,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("SIOT_LOG_LEVEL", "WARNING"))
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    argv = _apply_config(parser, argv)
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (NoCandidates, AllUnreachable) as err:
        log.error("%s", err)
        print(f"error: {err}", file=sys.stderr)
        return EMPTY_RESULT
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR
    except (DiscoveryError, DivergedTraining) as err:
        print(f"error: {err}", file=sys.stderr)
        return DATA_ERROR
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
