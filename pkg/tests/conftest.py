"""Shared builders for small, fully specified test populations."""

from __future__ import annotations

import numpy as np
import pytest

from siot_discovery import DeviceRecord, OwnerSocialNetwork


def make_device(
    device_id: int,
    owner_id: int | None = 0,
    visibility: str = "private",
    device_type: str = "camera",
    brand: str = "acme",
    mobility: str = "static",
    power_supply: str = "battery",
) -> DeviceRecord:
    return DeviceRecord(
        device_id=device_id,
        owner_id=owner_id,
        visibility=visibility,
        device_type=device_type,
        brand=brand,
        mobility=mobility,
        power_supply=power_supply,
    )


def random_catalog(
    rng: np.random.Generator,
    n_devices: int,
    n_owners: int,
    public_fraction: float = 0.1,
    friendship_prob: float = 0.15,
) -> tuple[list[DeviceRecord], OwnerSocialNetwork]:
    """Random mixed catalog with its own independent construction logic."""
    types = ["camera", "light", "lock", "thermostat"]
    brands = ["acme", "nova", "zephyr"]
    records = []
    for i in range(n_devices):
        public = rng.random() < public_fraction
        records.append(
            DeviceRecord(
                device_id=i,
                owner_id=None if public else int(rng.integers(n_owners)),
                visibility="public" if public else "private",
                device_type=types[int(rng.integers(len(types)))],
                brand=brands[int(rng.integers(len(brands)))],
                mobility="static" if rng.random() < 0.5 else "mobile",
                power_supply="battery" if rng.random() < 0.5 else "mains",
            )
        )
    owner_ids = frozenset(r.owner_id for r in records if r.owner_id is not None)
    pairs = set()
    for a in sorted(owner_ids):
        for b in sorted(owner_ids):
            if a < b and rng.random() < friendship_prob:
                pairs.add((a, b))
    return records, OwnerSocialNetwork(owners=owner_ids, friendships=frozenset(pairs))


@pytest.fixture
def five_device_catalog() -> tuple[list[DeviceRecord], OwnerSocialNetwork]:
    """Owner 0 holds devices 0-2, owner 1 holds 3-4, and they are friends,
    so the social graph over the five devices is complete."""
    records = [
        make_device(0, owner_id=0, device_type="camera", brand="acme"),
        make_device(1, owner_id=0, device_type="light", brand="nova"),
        make_device(2, owner_id=0, device_type="lock", brand="acme"),
        make_device(3, owner_id=1, device_type="camera", brand="nova"),
        make_device(4, owner_id=1, device_type="light", brand="acme"),
    ]
    owners = OwnerSocialNetwork(
        owners=frozenset({0, 1}), friendships=frozenset({(0, 1)})
    )
    return records, owners
