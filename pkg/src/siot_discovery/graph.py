"""Social graph construction, canonical serialization, shortest paths."""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .catalog import DeviceRecord, OwnerSocialNetwork
from .errors import UnknownDevice
from .features import FeatureEncoding

# sentinel distance for nodes with no path; ranks after every finite distance
UNREACHABLE = math.inf

SFOR_RELATION = "sfor"


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    relation: str
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.u == self.v:
            raise ValueError(f"self loop on {self.u}")
        if self.u > self.v:
            raise ValueError(f"edge not canonical: ({self.u}, {self.v})")
        if not self.weight >= 0.0:
            raise ValueError(f"negative edge weight {self.weight}")


@dataclass(frozen=True)
class SocialGraph:
    """Undirected weighted graph over device ids. Immutable once built."""

    node_ids: tuple[int, ...]
    edges: tuple[Edge, ...]
    _adjacency: dict[int, tuple[tuple[int, float], ...]] = field(
        init=False, repr=False, compare=False
    )
    _index: dict[int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        index = {n: i for i, n in enumerate(self.node_ids)}
        if len(index) != len(self.node_ids):
            raise ValueError("duplicate node ids")
        seen_pairs: set[tuple[int, int]] = set()
        adj: dict[int, list[tuple[int, float]]] = {n: [] for n in self.node_ids}
        for e in self.edges:
            if e.u not in index or e.v not in index:
                raise ValueError(f"edge ({e.u}, {e.v}) references unknown node")
            if (e.u, e.v) in seen_pairs:
                raise ValueError(f"duplicate edge ({e.u}, {e.v})")
            seen_pairs.add((e.u, e.v))
            adj[e.u].append((e.v, e.weight))
            adj[e.v].append((e.u, e.weight))
        frozen = {n: tuple(sorted(nbrs)) for n, nbrs in adj.items()}
        object.__setattr__(self, "_adjacency", frozen)
        object.__setattr__(self, "_index", index)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def has_node(self, device_id: int) -> bool:
        return device_id in self._index

    def node_index(self, device_id: int) -> int:
        try:
            return self._index[device_id]
        except KeyError:
            raise UnknownDevice(f"device {device_id} is not a graph node") from None

    def neighbors(self, device_id: int) -> tuple[tuple[int, float], ...]:
        """Sorted (neighbor_id, weight) pairs."""
        try:
            return self._adjacency[device_id]
        except KeyError:
            raise UnknownDevice(f"device {device_id} is not a graph node") from None

    def degree(self, device_id: int) -> int:
        return len(self.neighbors(device_id))

    def has_edge(self, a: int, b: int) -> bool:
        if a not in self._index or b not in self._index:
            return False
        nbrs = self._adjacency[a]
        return any(n == b for n, _ in nbrs)

    def csr_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Adjacency in CSR form over node positions (indptr, indices, weights)."""
        indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        counts = [len(self._adjacency[n]) for n in self.node_ids]
        indptr[1:] = np.cumsum(counts)
        indices = np.empty(int(indptr[-1]), dtype=np.int64)
        weights = np.empty(int(indptr[-1]), dtype=np.float64)
        pos = 0
        for n in self.node_ids:
            for nbr, w in self._adjacency[n]:
                indices[pos] = self._index[nbr]
                weights[pos] = w
                pos += 1
        return indptr, indices, weights


def build_sfor_edges(
    catalog: Sequence[DeviceRecord], owners: OwnerSocialNetwork
) -> SocialGraph:
    """Connect private devices whose owners coincide or are friends.

    Public (ownerless) devices become isolated nodes. Node order follows the
    catalog.
    """
    node_ids = tuple(r.device_id for r in catalog)
    by_owner: dict[int, list[int]] = {}
    for r in catalog:
        if r.owner_id is not None:
            by_owner.setdefault(r.owner_id, []).append(r.device_id)

    pairs: set[tuple[int, int]] = set()
    for devices in by_owner.values():
        for i in range(len(devices)):
            for j in range(i + 1, len(devices)):
                a, b = devices[i], devices[j]
                pairs.add((a, b) if a < b else (b, a))
    for oa, ob in owners.friendships:
        for a in by_owner.get(oa, ()):
            for b in by_owner.get(ob, ()):
                pairs.add((a, b) if a < b else (b, a))

    edges = tuple(Edge(u, v, SFOR_RELATION, 1.0) for u, v in sorted(pairs))
    return SocialGraph(node_ids=node_ids, edges=edges)


def inject_fake_device(
    graph: SocialGraph,
    encoding: FeatureEncoding,
    features: np.ndarray,
    copy_relations_of: int | None = None,
) -> tuple[SocialGraph, FeatureEncoding, int]:
    """Append a synthetic device carrying ``features``.

    With ``copy_relations_of`` the fake mirrors that device's edges, otherwise
    it is isolated. Inputs are left untouched; the fake id is one past the
    current maximum.
    """
    fake_id = (max(graph.node_ids) + 1) if graph.node_ids else 0
    new_edges = list(graph.edges)
    if copy_relations_of is not None:
        if not graph.has_node(copy_relations_of):
            raise UnknownDevice(f"device {copy_relations_of} is not a graph node")
        for nbr, weight in graph.neighbors(copy_relations_of):
            relation = _relation_of(graph, copy_relations_of, nbr)
            lo, hi = (nbr, fake_id) if nbr < fake_id else (fake_id, nbr)
            new_edges.append(Edge(lo, hi, relation, weight))
    new_graph = SocialGraph(
        node_ids=graph.node_ids + (fake_id,), edges=tuple(new_edges)
    )
    new_encoding = encoding.with_row(fake_id, features)
    return new_graph, new_encoding, fake_id


def _relation_of(graph: SocialGraph, a: int, b: int) -> str:
    lo, hi = (a, b) if a < b else (b, a)
    for e in graph.edges:
        if e.u == lo and e.v == hi:
            return e.relation
    raise UnknownDevice(f"no edge between {a} and {b}")


def remove_device(
    graph: SocialGraph, encoding: FeatureEncoding, device_id: int
) -> tuple[SocialGraph, FeatureEncoding]:
    """Drop a node, its edges, and its feature row. Exact inverse of inject."""
    if not graph.has_node(device_id):
        raise UnknownDevice(f"device {device_id} is not a graph node")
    new_graph = SocialGraph(
        node_ids=tuple(n for n in graph.node_ids if n != device_id),
        edges=tuple(e for e in graph.edges if device_id not in (e.u, e.v)),
    )
    keep = [i for i, d in enumerate(encoding.device_ids) if d != device_id]
    new_encoding = FeatureEncoding(
        device_ids=tuple(encoding.device_ids[i] for i in keep),
        vocabularies=encoding.vocabularies,
        matrix=encoding.matrix[keep].copy(),
    )
    return new_graph, new_encoding


def shortest_path_distance(
    graph: SocialGraph, source: int, targets: Iterable[int] | None = None
) -> dict[int, float]:
    """Dijkstra distances from ``source``. Unreached targets get UNREACHABLE."""
    if not graph.has_node(source):
        raise UnknownDevice(f"source {source} is not a graph node")
    wanted = set(graph.node_ids) if targets is None else set(targets)
    for t in wanted:
        if not graph.has_node(t):
            raise UnknownDevice(f"target {t} is not a graph node")

    dist: dict[int, float] = {source: 0.0}
    heap: list[tuple[float, int]] = [(0.0, source)]
    settled: set[int] = set()
    remaining = set(wanted)
    while heap and remaining:
        d, node = heapq.heappop(heap)
        if node in settled:
            continue
        settled.add(node)
        remaining.discard(node)
        for nbr, weight in graph.neighbors(node):
            nd = d + weight
            if nd < dist.get(nbr, UNREACHABLE):
                dist[nbr] = nd
                heapq.heappush(heap, (nd, nbr))
    return {t: dist.get(t, UNREACHABLE) for t in wanted}


def to_canonical_json(graph: SocialGraph) -> str:
    """Stable text form: sorted nodes, sorted edges. Equal graphs, equal text."""
    payload = {
        "nodes": sorted(graph.node_ids),
        "edges": [
            [e.u, e.v, e.relation, e.weight]
            for e in sorted(graph.edges, key=lambda e: (e.u, e.v))
        ],
    }
    return json.dumps(payload, separators=(",", ":"), sort_keys=True)


def graph_from_json(text: str) -> SocialGraph:
    payload = json.loads(text)
    edges = tuple(
        Edge(int(u), int(v), str(rel), float(w)) for u, v, rel, w in payload["edges"]
    )
    return SocialGraph(node_ids=tuple(int(n) for n in payload["nodes"]), edges=edges)


def canonical_equal(a: SocialGraph, b: SocialGraph) -> bool:
    return to_canonical_json(a) == to_canonical_json(b)
