"""Seeded benchmark populations used by the evaluation harness and tests."""

from __future__ import annotations

from .catalog import DeviceRecord, OwnerSocialNetwork, label_pool
from .rng import derive_rng


def two_clique_catalog(
    clique_size: int = 8,
    type_flip_fraction: float = 0.25,
    brand_vocab: int = 4,
    seed: int = 0,
) -> tuple[list[DeviceRecord], OwnerSocialNetwork]:
    """Two same-owner cliques with partially clique-aligned device types.

    Owner 0's devices are mostly ``typeA`` and owner 1's mostly ``typeB``;
    ``type_flip_fraction`` of each clique carries the other type, so
    attributes alone are informative about structure but not perfect.
    """
    if clique_size < 2:
        raise ValueError("clique_size must be >= 2")
    if not 0.0 <= type_flip_fraction <= 0.5:
        raise ValueError("type_flip_fraction must be in [0, 0.5]")
    rng = derive_rng(seed, "two-clique")
    brands = label_pool("brand", brand_vocab)
    n_flips = int(round(type_flip_fraction * clique_size))

    records: list[DeviceRecord] = []
    for clique, base_type, other_type in ((0, "typeA", "typeB"), (1, "typeB", "typeA")):
        flipped = set(rng.choice(clique_size, size=n_flips, replace=False).tolist())
        for j in range(clique_size):
            records.append(
                DeviceRecord(
                    device_id=clique * clique_size + j,
                    owner_id=clique,
                    visibility="private",
                    device_type=other_type if j in flipped else base_type,
                    brand=brands[int(rng.integers(brand_vocab))],
                    mobility="static",
                    power_supply="battery",
                )
            )
    owners = OwnerSocialNetwork(owners=frozenset({0, 1}), friendships=frozenset())
    return records, owners


def city_population(
    n_communities: int = 106,
    owners_per_community: int = 17,
    devices_per_owner: int = 7,
    loner_owners: int = 1900,
    type_vocab: int = 10,
    brand_vocab: int = 240,
    type_affinity: float = 0.85,
    brand_affinity: float = 0.75,
    cross_links: int = 2000,
    battery_fraction: float = 0.85,
    seed: int = 0,
) -> tuple[list[DeviceRecord], OwnerSocialNetwork]:
    """City-scale population: friendship communities plus solitary owners.

    Communities are groups of mutually befriended owners whose devices
    lean toward a shared home type and home brand (the brand vocabulary
    stands in for manufacturer and model combined, hence its size).
    Solitary owners have one device and no friends, so subsampling the
    population leaves a realistic mass of socially isolated devices.
    ``cross_links`` random befriendings bridge communities.
    """
    if n_communities < 2 or owners_per_community < 1 or devices_per_owner < 1:
        raise ValueError("need >= 2 communities and positive owner/device counts")
    if loner_owners < 0 or cross_links < 0:
        raise ValueError("loner_owners and cross_links must be >= 0")
    if not 0.0 <= battery_fraction <= 1.0:
        raise ValueError("battery_fraction must be in [0, 1]")
    for name, value in (("type_affinity", type_affinity), ("brand_affinity", brand_affinity)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must be in [0, 1]")
    rng = derive_rng(seed, "city")
    types = label_pool("type", type_vocab)
    brands = label_pool("brand", brand_vocab)

    records: list[DeviceRecord] = []
    friendships: set[tuple[int, int]] = set()
    device_id = 0
    for comm in range(n_communities):
        home_type = types[int(rng.integers(type_vocab))]
        home_brand = brands[int(rng.integers(brand_vocab))]
        owner_ids = [comm * owners_per_community + o for o in range(owners_per_community)]
        for i in range(len(owner_ids)):
            for j in range(i + 1, len(owner_ids)):
                friendships.add((owner_ids[i], owner_ids[j]))
        for owner in owner_ids:
            for _ in range(devices_per_owner):
                dtype = home_type if rng.random() < type_affinity else types[int(rng.integers(type_vocab))]
                dbrand = home_brand if rng.random() < brand_affinity else brands[int(rng.integers(brand_vocab))]
                records.append(
                    DeviceRecord(
                        device_id=device_id,
                        owner_id=owner,
                        visibility="private",
                        device_type=dtype,
                        brand=dbrand,
                        mobility="static" if rng.random() < 0.5 else "mobile",
                        power_supply="battery" if rng.random() < battery_fraction else "mains",
                    )
                )
                device_id += 1
    first_loner = n_communities * owners_per_community
    for loner in range(first_loner, first_loner + loner_owners):
        records.append(
            DeviceRecord(
                device_id=device_id,
                owner_id=loner,
                visibility="private",
                device_type=types[int(rng.integers(type_vocab))],
                brand=brands[int(rng.integers(brand_vocab))],
                mobility="static" if rng.random() < 0.5 else "mobile",
                power_supply="battery" if rng.random() < battery_fraction else "mains",
            )
        )
        device_id += 1
    community_owner_count = n_communities * owners_per_community
    for _ in range(cross_links):
        a = int(rng.integers(community_owner_count))
        b = int(rng.integers(community_owner_count))
        if a != b:
            friendships.add((min(a, b), max(a, b)))
    owners = OwnerSocialNetwork(
        owners=frozenset(r.owner_id for r in records if r.owner_id is not None),
        friendships=frozenset(friendships),
    )
    return records, owners


def community_catalog(
    n_communities: int = 12,
    owners_per_community: int = 4,
    devices_per_owner: int = 5,
    type_correlation: float = 0.9,
    brand_vocab: int = 6,
    seed: int = 0,
) -> tuple[list[DeviceRecord], OwnerSocialNetwork]:
    """Fixed benchmark: friendship communities with community-typed devices.

    Owners inside a community are mutual friends; a device takes its
    community's type with probability ``type_correlation``, otherwise a
    uniform one. Structure is therefore predictable from attributes to a
    tunable degree, which makes accuracy curves meaningful.
    """
    if n_communities < 2 or owners_per_community < 1 or devices_per_owner < 1:
        raise ValueError("community benchmark needs >= 2 communities, >= 1 owner/device")
    if not 0.0 <= type_correlation <= 1.0:
        raise ValueError("type_correlation must be in [0, 1]")
    rng = derive_rng(seed, "community")
    types = label_pool("type", n_communities)
    brands = label_pool("brand", brand_vocab)

    records: list[DeviceRecord] = []
    friendships: set[tuple[int, int]] = set()
    device_id = 0
    for comm in range(n_communities):
        owner_ids = [comm * owners_per_community + o for o in range(owners_per_community)]
        for i in range(len(owner_ids)):
            for j in range(i + 1, len(owner_ids)):
                friendships.add((owner_ids[i], owner_ids[j]))
        for owner in owner_ids:
            for _ in range(devices_per_owner):
                if rng.random() < type_correlation:
                    dtype = types[comm]
                else:
                    dtype = types[int(rng.integers(n_communities))]
                records.append(
                    DeviceRecord(
                        device_id=device_id,
                        owner_id=owner,
                        visibility="private",
                        device_type=dtype,
                        brand=brands[int(rng.integers(brand_vocab))],
                        mobility="static" if rng.random() < 0.5 else "mobile",
                        power_supply="battery" if rng.random() < 0.5 else "mains",
                    )
                )
                device_id += 1
    owners = OwnerSocialNetwork(
        owners=frozenset(r.owner_id for r in records if r.owner_id is not None),
        friendships=frozenset(friendships),
    )
    return records, owners
