"""One-hot feature encoding and service requests."""

import numpy as np
import pytest

from siot_discovery import (
    ServiceRequest,
    UnknownDevice,
    encode_features,
    random_request,
)
from siot_discovery.rng import derive_rng

from conftest import make_device


def small_catalog():
    return [
        make_device(0, device_type="camera", brand="acme",
                    mobility="static", power_supply="battery"),
        make_device(1, device_type="light", brand="nova",
                    mobility="mobile", power_supply="mains"),
        make_device(2, device_type="camera", brand="nova",
                    mobility="static", power_supply="mains"),
    ]


class TestEncodeFeatures:
    def test_vocabularies_are_sorted_distinct_values(self):
        enc = encode_features(small_catalog())
        assert enc.vocabularies == (
            ("camera", "light"),
            ("acme", "nova"),
            ("mobile", "static"),
            ("battery", "mains"),
        )

    def test_width_is_sum_of_vocab_sizes(self):
        enc = encode_features(small_catalog())
        assert enc.width == 8
        assert enc.matrix.shape == (3, 8)

    def test_each_row_activates_one_slot_per_block(self):
        enc = encode_features(small_catalog())
        for row in enc.matrix:
            assert row.sum() == 4.0
            for block in enc.block_slices():
                chunk = row[block]
                assert chunk.sum() == 1.0
                assert set(np.unique(chunk)) <= {0.0, 1.0}

    def test_rows_match_hand_encoding(self):
        enc = encode_features(small_catalog())
        # device 0: camera, acme, static, battery
        assert enc.row_for(0).tolist() == [1, 0, 1, 0, 0, 1, 1, 0]
        # device 1: light, nova, mobile, mains
        assert enc.row_for(1).tolist() == [0, 1, 0, 1, 1, 0, 0, 1]

    def test_row_index_follows_catalog_order(self):
        catalog = [make_device(7), make_device(3), make_device(9)]
        enc = encode_features(catalog)
        assert enc.device_ids == (7, 3, 9)
        assert enc.row_index(3) == 1
        assert np.array_equal(enc.row_for(9), enc.matrix[2])

    def test_unknown_device_raises(self):
        enc = encode_features(small_catalog())
        with pytest.raises(UnknownDevice):
            enc.row_for(42)
        with pytest.raises(UnknownDevice):
            enc.row_index(42)

    def test_encoding_is_pure_function_of_catalog(self):
        a = encode_features(small_catalog())
        b = encode_features(small_catalog())
        assert np.array_equal(a.matrix, b.matrix)
        assert a.vocabularies == b.vocabularies


class TestEncodeValues:
    def test_mapping_and_sequence_forms_agree(self):
        enc = encode_features(small_catalog())
        by_map = enc.encode_values(
            {"device_type": "light", "brand": "acme",
             "mobility": "static", "power_supply": "mains"}
        )
        by_seq = enc.encode_values(["light", "acme", "static", "mains"])
        assert np.array_equal(by_map, by_seq)
        assert enc.is_valid_one_hot(by_map)

    def test_encoded_device_row_equals_encode_values(self):
        catalog = small_catalog()
        enc = encode_features(catalog)
        vec = enc.encode_values(catalog[2].attribute_values())
        assert np.array_equal(vec, enc.row_for(2))

    def test_unknown_value_rejected(self):
        enc = encode_features(small_catalog())
        with pytest.raises(ValueError):
            enc.encode_values(["drone", "acme", "static", "mains"])

    def test_wrong_arity_rejected(self):
        enc = encode_features(small_catalog())
        with pytest.raises(ValueError):
            enc.encode_values(["camera", "acme", "static"])


class TestBlockHelpers:
    def test_matching_blocks_counts_agreeing_attributes(self):
        enc = encode_features(small_catalog())
        assert enc.matching_blocks(enc.row_for(0), enc.row_for(0)) == 4
        # devices 0 and 2 share camera and static only
        assert enc.matching_blocks(enc.row_for(0), enc.row_for(2)) == 2
        # devices 0 and 1 differ everywhere
        assert enc.matching_blocks(enc.row_for(0), enc.row_for(1)) == 0

    def test_is_valid_one_hot_rejects_bad_vectors(self):
        enc = encode_features(small_catalog())
        assert not enc.is_valid_one_hot(np.zeros(enc.width))
        assert not enc.is_valid_one_hot(np.ones(enc.width))
        assert not enc.is_valid_one_hot(np.zeros(enc.width + 1))
        two_hot = enc.row_for(0).copy()
        two_hot[1] = 1.0
        assert not enc.is_valid_one_hot(two_hot)

    def test_with_row_appends_and_without_last_row_undoes(self):
        enc = encode_features(small_catalog())
        vec = enc.encode_values(["light", "nova", "static", "battery"])
        bigger = enc.with_row(99, vec)
        assert bigger.n_devices == 4
        assert np.array_equal(bigger.row_for(99), vec)
        back = bigger.without_last_row()
        assert back.device_ids == enc.device_ids
        assert np.array_equal(back.matrix, enc.matrix)

    def test_with_row_rejects_duplicates_and_invalid_rows(self):
        enc = encode_features(small_catalog())
        with pytest.raises(ValueError):
            enc.with_row(0, enc.row_for(1))
        with pytest.raises(ValueError):
            enc.with_row(99, np.zeros(enc.width))


class TestServiceRequest:
    def test_validated_against_accepts_good_request(self):
        enc = encode_features(small_catalog())
        req = ServiceRequest(
            requester_id=1,
            required_features=enc.encode_values(["camera", "nova", "static", "mains"]),
        )
        assert req.validated_against(enc) is req

    def test_unknown_requester_rejected(self):
        enc = encode_features(small_catalog())
        req = ServiceRequest(requester_id=123, required_features=enc.row_for(0))
        with pytest.raises(UnknownDevice):
            req.validated_against(enc)

    def test_invalid_profile_rejected(self):
        enc = encode_features(small_catalog())
        req = ServiceRequest(requester_id=0, required_features=np.ones(enc.width))
        with pytest.raises(ValueError):
            req.validated_against(enc)

    def test_random_request_is_always_valid(self):
        enc = encode_features(small_catalog())
        for seed in range(30):
            req = random_request(enc, derive_rng(seed))
            assert req.requester_id in enc.device_ids
            assert enc.is_valid_one_hot(req.required_features)

    def test_random_request_is_deterministic_per_stream(self):
        enc = encode_features(small_catalog())
        a = random_request(enc, derive_rng(5))
        b = random_request(enc, derive_rng(5))
        assert a.requester_id == b.requester_id
        assert np.array_equal(a.required_features, b.required_features)
