"""Social graph construction, canonical form, and shortest paths."""

import json
import math

import numpy as np
import pytest

from siot_discovery import (
    Edge,
    SocialGraph,
    UNREACHABLE,
    UnknownDevice,
    build_sfor_edges,
    graph_from_json,
    inject_fake_device,
    remove_device,
    shortest_path_distance,
    to_canonical_json,
)
from siot_discovery.features import encode_features
from siot_discovery.graph import canonical_equal
from siot_discovery.rng import derive_rng

from conftest import make_device, random_catalog


def brute_force_sfor_pairs(catalog, owners):
    """Quadratic scan: private devices connect iff owners match or befriend."""
    pairs = set()
    for a in catalog:
        for b in catalog:
            if a.device_id >= b.device_id:
                continue
            if a.owner_id is None or b.owner_id is None:
                continue
            if a.owner_id == b.owner_id or owners.are_friends(a.owner_id, b.owner_id):
                pairs.add((a.device_id, b.device_id))
    return pairs


def bellman_ford(n_nodes, edge_list, source):
    """Reference distances over node positions; edge_list holds (u, v, w)."""
    dist = [math.inf] * n_nodes
    dist[source] = 0.0
    for _ in range(n_nodes - 1):
        changed = False
        for u, v, w in edge_list:
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
                changed = True
            if dist[v] + w < dist[u]:
                dist[u] = dist[v] + w
                changed = True
        if not changed:
            break
    return dist


def random_weighted_graph(rng, n):
    """Connected-ish random graph; weights on a binary-exact half grid."""
    node_ids = tuple(range(n))
    pairs = set()
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < 0.15:
                pairs.add((u, v))
    weights = {p: 0.5 * float(rng.integers(1, 6)) for p in pairs}
    edges = tuple(Edge(u, v, "sfor", weights[(u, v)]) for u, v in sorted(pairs))
    return SocialGraph(node_ids=node_ids, edges=edges)


class TestEdgeValidation:
    def test_self_loop_rejected(self):
        with pytest.raises(ValueError):
            Edge(3, 3, "sfor")

    def test_non_canonical_order_rejected(self):
        with pytest.raises(ValueError):
            Edge(5, 2, "sfor")

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            Edge(1, 2, "sfor", weight=-0.5)


class TestSocialGraph:
    def test_duplicate_edge_rejected(self):
        with pytest.raises(ValueError):
            SocialGraph(
                node_ids=(0, 1),
                edges=(Edge(0, 1, "sfor"), Edge(0, 1, "sfor")),
            )

    def test_edge_to_unknown_node_rejected(self):
        with pytest.raises(ValueError):
            SocialGraph(node_ids=(0, 1), edges=(Edge(0, 2, "sfor"),))

    def test_duplicate_node_ids_rejected(self):
        with pytest.raises(ValueError):
            SocialGraph(node_ids=(0, 0), edges=())

    def test_neighbors_are_sorted_and_symmetric(self):
        g = SocialGraph(
            node_ids=(0, 1, 2),
            edges=(Edge(0, 2, "sfor"), Edge(0, 1, "sfor")),
        )
        assert g.neighbors(0) == ((1, 1.0), (2, 1.0))
        assert g.neighbors(2) == ((0, 1.0),)
        assert g.degree(0) == 2
        assert g.has_edge(2, 0) and g.has_edge(0, 2)
        assert not g.has_edge(1, 2)

    def test_unknown_node_lookups_raise(self):
        g = SocialGraph(node_ids=(0,), edges=())
        with pytest.raises(UnknownDevice):
            g.neighbors(5)
        with pytest.raises(UnknownDevice):
            g.node_index(5)

    def test_csr_arrays_mirror_adjacency(self):
        g = SocialGraph(
            node_ids=(10, 20, 30),
            edges=(Edge(10, 20, "sfor", 2.0), Edge(20, 30, "sfor", 3.0)),
        )
        indptr, indices, weights = g.csr_arrays()
        assert indptr.tolist() == [0, 1, 3, 4]
        # row order follows node_ids; indices are positions, not device ids
        assert indices.tolist() == [1, 0, 2, 1]
        assert weights.tolist() == [2.0, 2.0, 3.0, 3.0]


class TestBuildSforEdges:
    def test_two_friendly_owners_make_a_complete_graph(self, five_device_catalog):
        catalog, owners = five_device_catalog
        g = build_sfor_edges(catalog, owners)
        assert g.n_nodes == 5
        assert g.n_edges == 10

    def test_public_devices_stay_isolated(self):
        catalog = [
            make_device(0, owner_id=0),
            make_device(1, owner_id=0),
            make_device(2, owner_id=None, visibility="public"),
        ]
        from siot_discovery import OwnerSocialNetwork

        owners = OwnerSocialNetwork(owners=frozenset({0}), friendships=frozenset())
        g = build_sfor_edges(catalog, owners)
        assert g.degree(2) == 0
        assert g.has_edge(0, 1)

    def test_matches_quadratic_scan_on_random_catalogs(self):
        for seed in range(12):
            rng = derive_rng(seed, "sfor-oracle")
            catalog, owners = random_catalog(rng, n_devices=60, n_owners=8)
            g = build_sfor_edges(catalog, owners)
            got = {(e.u, e.v) for e in g.edges}
            assert got == brute_force_sfor_pairs(catalog, owners)

    def test_all_edges_carry_sfor_relation_and_unit_weight(self, five_device_catalog):
        g = build_sfor_edges(*five_device_catalog)
        assert all(e.relation == "sfor" and e.weight == 1.0 for e in g.edges)


class TestInjectRemove:
    def test_isolated_fake_gets_fresh_id(self, five_device_catalog):
        catalog, owners = five_device_catalog
        g = build_sfor_edges(catalog, owners)
        enc = encode_features(catalog)
        g2, enc2, fake = inject_fake_device(g, enc, enc.row_for(0))
        assert fake == 5
        assert g2.n_nodes == 6
        assert g2.degree(fake) == 0
        assert np.array_equal(enc2.row_for(fake), enc.row_for(0))

    def test_copy_relations_mirrors_neighborhood(self, five_device_catalog):
        catalog, owners = five_device_catalog
        g = build_sfor_edges(catalog, owners)
        enc = encode_features(catalog)
        g2, _, fake = inject_fake_device(g, enc, enc.row_for(0), copy_relations_of=3)
        fake_nbrs = {n for n, _ in g2.neighbors(fake)}
        orig_nbrs = {n for n, _ in g.neighbors(3)}
        assert fake_nbrs == orig_nbrs

    def test_inject_then_remove_is_identity(self, five_device_catalog):
        catalog, owners = five_device_catalog
        g = build_sfor_edges(catalog, owners)
        enc = encode_features(catalog)
        g2, enc2, fake = inject_fake_device(g, enc, enc.row_for(1), copy_relations_of=0)
        g3, enc3 = remove_device(g2, enc2, fake)
        assert canonical_equal(g, g3)
        assert enc3.device_ids == enc.device_ids
        assert np.array_equal(enc3.matrix, enc.matrix)

    def test_inputs_are_not_mutated(self, five_device_catalog):
        catalog, owners = five_device_catalog
        g = build_sfor_edges(catalog, owners)
        enc = encode_features(catalog)
        before = to_canonical_json(g)
        inject_fake_device(g, enc, enc.row_for(0), copy_relations_of=1)
        assert to_canonical_json(g) == before
        assert enc.n_devices == 5

    def test_copying_unknown_device_raises(self, five_device_catalog):
        catalog, owners = five_device_catalog
        g = build_sfor_edges(catalog, owners)
        enc = encode_features(catalog)
        with pytest.raises(UnknownDevice):
            inject_fake_device(g, enc, enc.row_for(0), copy_relations_of=77)

    def test_removing_unknown_device_raises(self, five_device_catalog):
        catalog, owners = five_device_catalog
        g = build_sfor_edges(catalog, owners)
        enc = encode_features(catalog)
        with pytest.raises(UnknownDevice):
            remove_device(g, enc, 77)


class TestShortestPath:
    def test_path_graph_distances(self):
        g = SocialGraph(
            node_ids=(0, 1, 2, 3),
            edges=(Edge(0, 1, "sfor"), Edge(1, 2, "sfor"), Edge(2, 3, "sfor")),
        )
        dist = shortest_path_distance(g, 0)
        assert dist == {0: 0.0, 1: 1.0, 2: 2.0, 3: 3.0}

    def test_unreachable_targets_get_sentinel(self):
        g = SocialGraph(node_ids=(0, 1, 2), edges=(Edge(0, 1, "sfor"),))
        dist = shortest_path_distance(g, 0, targets=[2])
        assert dist[2] == UNREACHABLE
        assert math.isinf(UNREACHABLE)

    def test_weighted_shortcut_wins(self):
        g = SocialGraph(
            node_ids=(0, 1, 2),
            edges=(
                Edge(0, 1, "sfor", 5.0),
                Edge(0, 2, "sfor", 1.0),
                Edge(1, 2, "sfor", 1.0),
            ),
        )
        assert shortest_path_distance(g, 0)[1] == 2.0

    def test_matches_bellman_ford_on_random_graphs(self):
        for seed in range(25):
            rng = derive_rng(seed, "dijkstra-oracle")
            n = int(rng.integers(2, 40))
            g = random_weighted_graph(rng, n)
            source = int(rng.integers(n))
            expected = bellman_ford(
                n, [(e.u, e.v, e.weight) for e in g.edges], source
            )
            got = shortest_path_distance(g, source)
            for node in range(n):
                assert got[node] == expected[node]

    def test_triangle_inequality_holds(self):
        rng = derive_rng(99, "triangle")
        g = random_weighted_graph(rng, 25)
        d0 = shortest_path_distance(g, 0)
        d5 = shortest_path_distance(g, 5)
        for t in range(25):
            if math.isfinite(d0[5]) and math.isfinite(d5[t]):
                assert d0[t] <= d0[5] + d5[t] + 1e-12

    def test_targets_subset_only(self):
        g = SocialGraph(node_ids=(0, 1, 2), edges=(Edge(0, 1, "sfor"),))
        assert set(shortest_path_distance(g, 0, targets=[1])) == {1}

    def test_unknown_source_or_target_raises(self):
        g = SocialGraph(node_ids=(0, 1), edges=())
        with pytest.raises(UnknownDevice):
            shortest_path_distance(g, 9)
        with pytest.raises(UnknownDevice):
            shortest_path_distance(g, 0, targets=[9])


class TestCanonicalJson:
    def test_round_trip_preserves_structure(self, five_device_catalog):
        g = build_sfor_edges(*five_device_catalog)
        back = graph_from_json(to_canonical_json(g))
        assert canonical_equal(g, back)
        assert back.n_edges == g.n_edges

    def test_node_order_does_not_change_canonical_text(self):
        edges = (Edge(0, 1, "sfor"),)
        a = SocialGraph(node_ids=(0, 1, 2), edges=edges)
        b = SocialGraph(node_ids=(2, 1, 0), edges=edges)
        assert to_canonical_json(a) == to_canonical_json(b)
        assert canonical_equal(a, b)

    def test_text_is_valid_sorted_json(self, five_device_catalog):
        g = build_sfor_edges(*five_device_catalog)
        payload = json.loads(to_canonical_json(g))
        assert payload["nodes"] == sorted(payload["nodes"])
        pairs = [(u, v) for u, v, _, _ in payload["edges"]]
        assert pairs == sorted(pairs)
