"""Catalog ingestion, synthesis, and subnetwork sampling."""

import io

import numpy as np
import pytest

from siot_discovery import (
    DeviceRecord,
    DuplicateDeviceId,
    DanglingOwner,
    InsufficientPopulation,
    MalformedRow,
    OwnerSocialNetwork,
    ingest_catalog,
    sample_subnetwork,
    synthesize_catalog,
)
from siot_discovery.catalog import (
    ATTRIBUTE_FIELDS,
    DEVICE_CSV_HEADER,
    FRIENDSHIP_CSV_HEADER,
    catalog_to_csv_text,
    default_sample_filter,
    label_pool,
    write_device_csv,
    write_friendship_csv,
)

from conftest import make_device

GOOD_DEVICES = (
    "device_id,owner_id,visibility,device_type,brand,mobility,power_supply\n"
    "0,10,private,camera,acme,static,battery\n"
    "1,10,private,light,nova,mobile,mains\n"
    "2,,public,camera,acme,static,battery\n"
    "3,11,private,lock,zephyr,static,mains\n"
)
GOOD_FRIENDSHIPS = "owner_a,owner_b\n10,11\n"


class TestDeviceRecord:
    def test_public_device_cannot_have_owner(self):
        with pytest.raises(ValueError):
            make_device(0, owner_id=5, visibility="public")

    def test_private_device_needs_owner(self):
        with pytest.raises(ValueError):
            make_device(0, owner_id=None, visibility="private")

    def test_bad_visibility_rejected(self):
        with pytest.raises(ValueError):
            make_device(0, visibility="secret")

    def test_attribute_values_follow_field_order(self):
        r = make_device(0, device_type="lock", brand="nova",
                        mobility="mobile", power_supply="mains")
        assert r.attribute_values() == ("lock", "nova", "mobile", "mains")
        assert ATTRIBUTE_FIELDS == ("device_type", "brand", "mobility", "power_supply")


class TestOwnerSocialNetwork:
    def test_friendship_is_symmetric_and_irreflexive(self):
        net = OwnerSocialNetwork(
            owners=frozenset({1, 2, 3}), friendships=frozenset({(1, 2)})
        )
        assert net.are_friends(1, 2)
        assert net.are_friends(2, 1)
        assert not net.are_friends(1, 1)
        assert not net.are_friends(1, 3)

    def test_non_canonical_pair_rejected(self):
        with pytest.raises(ValueError):
            OwnerSocialNetwork(owners=frozenset({1, 2}), friendships=frozenset({(2, 1)}))

    def test_friends_of_collects_both_sides(self):
        net = OwnerSocialNetwork(
            owners=frozenset({1, 2, 3}),
            friendships=frozenset({(1, 2), (2, 3)}),
        )
        assert net.friends_of(2) == frozenset({1, 3})
        assert net.friends_of(1) == frozenset({2})

    def test_restricted_to_drops_external_edges(self):
        net = OwnerSocialNetwork(
            owners=frozenset({1, 2, 3}),
            friendships=frozenset({(1, 2), (2, 3)}),
        )
        small = net.restricted_to({1, 2})
        assert small.owners == frozenset({1, 2})
        assert small.friendships == frozenset({(1, 2)})


class TestIngest:
    def test_round_trip_through_csv_text(self):
        catalog, owners = ingest_catalog(
            io.StringIO(GOOD_DEVICES), io.StringIO(GOOD_FRIENDSHIPS)
        )
        assert [r.device_id for r in catalog] == [0, 1, 2, 3]
        assert catalog[2].owner_id is None
        assert owners.are_friends(10, 11)
        assert catalog_to_csv_text(catalog) == GOOD_DEVICES

    def test_bad_header_is_malformed(self):
        with pytest.raises(MalformedRow):
            ingest_catalog(io.StringIO("id,owner\n1,2\n"))

    def test_wrong_field_count_is_malformed(self):
        text = GOOD_DEVICES + "4,10,private,camera\n"
        with pytest.raises(MalformedRow):
            ingest_catalog(io.StringIO(text))

    def test_non_integer_id_is_malformed(self):
        text = GOOD_DEVICES.replace("0,10", "zero,10", 1)
        with pytest.raises(MalformedRow):
            ingest_catalog(io.StringIO(text))

    def test_public_with_owner_is_malformed(self):
        text = GOOD_DEVICES.replace("2,,public", "2,12,public")
        with pytest.raises(MalformedRow):
            ingest_catalog(io.StringIO(text))

    def test_private_without_owner_is_malformed(self):
        text = GOOD_DEVICES.replace("3,11,private", "3,,private")
        with pytest.raises(MalformedRow):
            ingest_catalog(io.StringIO(text))

    def test_bad_mobility_value_is_malformed(self):
        text = GOOD_DEVICES.replace("static,battery\n1", "rolling,battery\n1")
        with pytest.raises(MalformedRow):
            ingest_catalog(io.StringIO(text))

    def test_duplicate_device_id_detected(self):
        text = GOOD_DEVICES + "3,11,private,lock,zephyr,static,mains\n"
        with pytest.raises(DuplicateDeviceId):
            ingest_catalog(io.StringIO(text))

    def test_friendship_with_unknown_owner_dangles(self):
        with pytest.raises(DanglingOwner):
            ingest_catalog(io.StringIO(GOOD_DEVICES), io.StringIO("owner_a,owner_b\n10,99\n"))

    def test_self_friendship_is_malformed(self):
        with pytest.raises(MalformedRow):
            ingest_catalog(io.StringIO(GOOD_DEVICES), io.StringIO("owner_a,owner_b\n10,10\n"))

    def test_friendship_pairs_deduplicate_across_order(self):
        text = "owner_a,owner_b\n11,10\n10,11\n"
        _, owners = ingest_catalog(io.StringIO(GOOD_DEVICES), io.StringIO(text))
        assert owners.friendships == frozenset({(10, 11)})


class TestWriters:
    def test_device_writer_emits_documented_header(self):
        buf = io.StringIO()
        write_device_csv([make_device(0)], buf)
        assert buf.getvalue().splitlines()[0] == ",".join(DEVICE_CSV_HEADER)

    def test_friendship_writer_emits_sorted_rows(self):
        net = OwnerSocialNetwork(
            owners=frozenset({1, 2, 3}),
            friendships=frozenset({(2, 3), (1, 2)}),
        )
        buf = io.StringIO()
        write_friendship_csv(net, buf)
        assert buf.getvalue() == ",".join(FRIENDSHIP_CSV_HEADER) + "\n1,2\n2,3\n"

    def test_write_then_ingest_is_identity(self, tmp_path):
        catalog, owners = synthesize_catalog(40, 6, 9, [4, 5, 2, 2], 0.2, seed=7)
        dev = tmp_path / "devices.csv"
        fr = tmp_path / "friendships.csv"
        write_device_csv(catalog, dev)
        write_friendship_csv(owners, fr)
        back_catalog, back_owners = ingest_catalog(dev, fr)
        assert back_catalog == catalog
        assert back_owners.friendships == owners.friendships


class TestSynthesize:
    def test_same_seed_reproduces_catalog(self):
        a = synthesize_catalog(50, 10, 8, [5, 6, 2, 2], 0.1, seed=3)
        b = synthesize_catalog(50, 10, 8, [5, 6, 2, 2], 0.1, seed=3)
        assert a[0] == b[0]
        assert a[1].friendships == b[1].friendships

    def test_different_seed_changes_something(self):
        a = synthesize_catalog(50, 10, 8, [5, 6, 2, 2], 0.1, seed=3)
        b = synthesize_catalog(50, 10, 8, [5, 6, 2, 2], 0.1, seed=4)
        assert a[0] != b[0] or a[1].friendships != b[1].friendships

    def test_counts_and_visibility_split(self):
        catalog, _ = synthesize_catalog(30, 12, 5, [3, 3, 2, 2], 0.0, seed=0)
        assert len(catalog) == 42
        assert sum(1 for r in catalog if r.is_private) == 30
        assert all(not r.is_private for r in catalog[30:])

    def test_degenerate_single_device(self):
        catalog, owners = synthesize_catalog(1, 0, 1, [1, 1, 1, 1], 0.0, seed=0)
        assert len(catalog) == 1
        record = catalog[0]
        assert record.owner_id == 0
        assert record.attribute_values() == ("type00", "brand00", "static", "battery")
        assert owners.friendships == frozenset()

    def test_friendship_prob_one_builds_complete_network(self):
        catalog, owners = synthesize_catalog(40, 0, 6, [2, 2, 2, 2], 1.0, seed=1)
        present = sorted(owners.owners)
        expected = {(a, b) for i, a in enumerate(present) for b in present[i + 1:]}
        assert owners.friendships == frozenset(expected)

    def test_vocab_validation(self):
        with pytest.raises(ValueError):
            synthesize_catalog(5, 0, 2, [3, 3, 2], 0.1, seed=0)
        with pytest.raises(ValueError):
            synthesize_catalog(5, 0, 2, [3, 3, 3, 2], 0.1, seed=0)
        with pytest.raises(ValueError):
            synthesize_catalog(5, 0, 2, [3, 3, 2, 2], 1.5, seed=0)
        with pytest.raises(ValueError):
            synthesize_catalog(5, 0, 0, [3, 3, 2, 2], 0.1, seed=0)

    def test_label_pool_width_is_stable(self):
        assert label_pool("type", 3) == ["type00", "type01", "type02"]
        assert label_pool("b", 101)[100] == "b100"


class TestSampleSubnetwork:
    def test_filter_and_size(self):
        catalog, owners = synthesize_catalog(200, 30, 20, [4, 4, 2, 2], 0.05, seed=5)
        sample, _ = sample_subnetwork(catalog, owners, 40, seed=0)
        assert len(sample) == 40
        assert all(default_sample_filter(r) for r in sample)

    def test_sample_preserves_catalog_order(self):
        catalog, owners = synthesize_catalog(100, 0, 10, [4, 4, 2, 2], 0.0, seed=5)
        sample, _ = sample_subnetwork(catalog, owners, 25, seed=1)
        ids = [r.device_id for r in sample]
        assert ids == sorted(ids)

    def test_owner_network_restricted_to_sampled_owners(self):
        catalog, owners = synthesize_catalog(120, 0, 15, [4, 4, 2, 2], 0.3, seed=2)
        sample, sub_owners = sample_subnetwork(catalog, owners, 30, seed=3)
        kept = {r.owner_id for r in sample}
        assert sub_owners.owners == frozenset(kept)
        for a, b in sub_owners.friendships:
            assert a in kept and b in kept

    def test_same_seed_same_sample(self):
        catalog, owners = synthesize_catalog(150, 0, 12, [4, 4, 2, 2], 0.1, seed=9)
        a, _ = sample_subnetwork(catalog, owners, 50, seed=4)
        b, _ = sample_subnetwork(catalog, owners, 50, seed=4)
        assert a == b

    def test_insufficient_population_raises(self):
        catalog = [make_device(i, mobility="mobile") for i in range(10)]
        owners = OwnerSocialNetwork(owners=frozenset({0}), friendships=frozenset())
        with pytest.raises(InsufficientPopulation):
            sample_subnetwork(catalog, owners, 5, seed=0)

    def test_inclusion_frequency_is_uniform(self):
        # 40 eligible devices, samples of 10: each device should appear in
        # about a quarter of draws (hypergeometric marginal n/N)
        catalog = [make_device(i, owner_id=i % 4) for i in range(40)]
        owners = OwnerSocialNetwork(
            owners=frozenset(range(4)), friendships=frozenset()
        )
        hits = 0
        n_draws = 600
        for seed in range(n_draws):
            sample, _ = sample_subnetwork(catalog, owners, 10, seed=seed)
            if any(r.device_id == 17 for r in sample):
                hits += 1
        assert abs(hits / n_draws - 0.25) < 0.05

    def test_custom_predicate(self):
        catalog, owners = synthesize_catalog(80, 0, 8, [4, 4, 2, 2], 0.0, seed=6)
        sample, _ = sample_subnetwork(
            catalog, owners, 10, seed=0,
            predicate=lambda r: r.power_supply == "mains",
        )
        assert all(r.power_supply == "mains" for r in sample)
