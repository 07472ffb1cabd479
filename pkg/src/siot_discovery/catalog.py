"""Device catalog: ingestion, synthesis, and subnetwork sampling.

A catalog is a list of :class:`DeviceRecord`. Owner friendships live in a
separate :class:`OwnerSocialNetwork`; both are consumed downstream when the
social graph is built.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from .errors import (
    DanglingOwner,
    DuplicateDeviceId,
    InsufficientPopulation,
    MalformedRow,
)
from .rng import derive_rng

DEVICE_CSV_HEADER = [
    "device_id",
    "owner_id",
    "visibility",
    "device_type",
    "brand",
    "mobility",
    "power_supply",
]
FRIENDSHIP_CSV_HEADER = ["owner_a", "owner_b"]

# canonical attribute order; feature encoding and similarity metrics rely on it
ATTRIBUTE_FIELDS = ("device_type", "brand", "mobility", "power_supply")

VISIBILITIES = ("private", "public")
MOBILITY_VALUES = ("static", "mobile")
POWER_VALUES = ("battery", "mains")


@dataclass(frozen=True)
class DeviceRecord:
    """One catalog row.

    Public devices have no owner; private devices must have one.
    """

    device_id: int
    owner_id: int | None
    visibility: str
    device_type: str
    brand: str
    mobility: str
    power_supply: str

    def __post_init__(self) -> None:
        if self.visibility not in VISIBILITIES:
            raise ValueError(f"bad visibility {self.visibility!r}")
        if self.visibility == "public" and self.owner_id is not None:
            raise ValueError("public device cannot have an owner")
        if self.visibility == "private" and self.owner_id is None:
            raise ValueError("private device needs an owner")

    @property
    def is_private(self) -> bool:
        return self.visibility == "private"

    def attribute_values(self) -> tuple[str, ...]:
        return tuple(getattr(self, f) for f in ATTRIBUTE_FIELDS)


@dataclass(frozen=True)
class OwnerSocialNetwork:
    """Undirected friendship relation over owner ids."""

    owners: frozenset[int]
    friendships: frozenset[tuple[int, int]]  # canonical (a, b) with a < b

    def __post_init__(self) -> None:
        for a, b in self.friendships:
            if a >= b:
                raise ValueError(f"friendship pair not canonical: ({a}, {b})")

    def are_friends(self, a: int, b: int) -> bool:
        if a == b:
            return False
        lo, hi = (a, b) if a < b else (b, a)
        return (lo, hi) in self.friendships

    def friends_of(self, owner: int) -> frozenset[int]:
        out = set()
        for a, b in self.friendships:
            if a == owner:
                out.add(b)
            elif b == owner:
                out.add(a)
        return frozenset(out)

    def restricted_to(self, owners: Iterable[int]) -> "OwnerSocialNetwork":
        """Keep only the given owners and friendships internal to them."""
        keep = frozenset(owners)
        kept_edges = frozenset(
            (a, b) for a, b in self.friendships if a in keep and b in keep
        )
        return OwnerSocialNetwork(owners=keep, friendships=kept_edges)


def _canonical_pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def _open_maybe(source: str | Path | TextIO) -> tuple[TextIO, bool]:
    if isinstance(source, (str, Path)):
        return open(source, "r", newline=""), True
    return source, False


def _parse_int(token: str, line_no: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise MalformedRow(f"line {line_no}: {what} {token!r} is not an integer") from None


def ingest_catalog(
    devices: str | Path | TextIO,
    friendships: str | Path | TextIO | None = None,
) -> tuple[list[DeviceRecord], OwnerSocialNetwork]:
    """Read a device CSV (and optional friendship CSV) into catalog + owners.

    Raises MalformedRow, DuplicateDeviceId, or DanglingOwner on bad input.
    """
    stream, close_me = _open_maybe(devices)
    records: list[DeviceRecord] = []
    seen: set[int] = set()
    try:
        reader = csv.reader(stream)
        header = next(reader, None)
        if header != DEVICE_CSV_HEADER:
            raise MalformedRow(f"bad device header: {header!r}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(DEVICE_CSV_HEADER):
                raise MalformedRow(f"line {line_no}: expected 7 fields, got {len(row)}")
            device_id = _parse_int(row[0], line_no, "device_id")
            visibility = row[2]
            if visibility not in VISIBILITIES:
                raise MalformedRow(f"line {line_no}: bad visibility {visibility!r}")
            owner_token = row[1].strip()
            if visibility == "public":
                if owner_token:
                    raise MalformedRow(f"line {line_no}: public device with owner")
                owner_id = None
            else:
                if not owner_token:
                    raise MalformedRow(f"line {line_no}: private device without owner")
                owner_id = _parse_int(owner_token, line_no, "owner_id")
            if row[5] not in MOBILITY_VALUES:
                raise MalformedRow(f"line {line_no}: bad mobility {row[5]!r}")
            if row[6] not in POWER_VALUES:
                raise MalformedRow(f"line {line_no}: bad power_supply {row[6]!r}")
            if not row[3] or not row[4]:
                raise MalformedRow(f"line {line_no}: empty attribute value")
            if device_id in seen:
                raise DuplicateDeviceId(f"line {line_no}: device_id {device_id} repeated")
            seen.add(device_id)
            records.append(
                DeviceRecord(
                    device_id=device_id,
                    owner_id=owner_id,
                    visibility=visibility,
                    device_type=row[3],
                    brand=row[4],
                    mobility=row[5],
                    power_supply=row[6],
                )
            )
    finally:
        if close_me:
            stream.close()

    known_owners = frozenset(r.owner_id for r in records if r.owner_id is not None)
    pairs: set[tuple[int, int]] = set()
    if friendships is not None:
        fstream, close_me = _open_maybe(friendships)
        try:
            reader = csv.reader(fstream)
            header = next(reader, None)
            if header != FRIENDSHIP_CSV_HEADER:
                raise MalformedRow(f"bad friendship header: {header!r}")
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 2:
                    raise MalformedRow(f"line {line_no}: expected 2 fields, got {len(row)}")
                a = _parse_int(row[0], line_no, "owner_a")
                b = _parse_int(row[1], line_no, "owner_b")
                if a == b:
                    raise MalformedRow(f"line {line_no}: owner befriends itself")
                for owner in (a, b):
                    if owner not in known_owners:
                        raise DanglingOwner(f"line {line_no}: unknown owner {owner}")
                pairs.add(_canonical_pair(a, b))
        finally:
            if close_me:
                fstream.close()

    return records, OwnerSocialNetwork(owners=known_owners, friendships=frozenset(pairs))


def label_pool(prefix: str, size: int) -> list[str]:
    width = max(2, len(str(size - 1)))
    return [f"{prefix}{i:0{width}d}" for i in range(size)]


def synthesize_catalog(
    n_private: int,
    n_public: int,
    n_owners: int,
    vocab_sizes: Sequence[int],
    friendship_prob: float,
    seed: int,
) -> tuple[list[DeviceRecord], OwnerSocialNetwork]:
    """Generate a uniform random catalog plus an ER friendship network.

    Attribute values are drawn uniformly from generated vocabularies, owners
    are assigned uniformly, and every owner pair is befriended independently
    with probability ``friendship_prob``. Fixed seed, identical output.
    """
    if len(vocab_sizes) != len(ATTRIBUTE_FIELDS):
        raise ValueError(f"need {len(ATTRIBUTE_FIELDS)} vocab sizes")
    if n_private > 0 and n_owners < 1:
        raise ValueError("private devices need at least one owner")
    if not 0.0 <= friendship_prob <= 1.0:
        raise ValueError("friendship_prob outside [0, 1]")
    type_n, brand_n, mob_n, pow_n = (int(s) for s in vocab_sizes)
    if not 1 <= mob_n <= len(MOBILITY_VALUES):
        raise ValueError("mobility vocab size must be 1 or 2")
    if not 1 <= pow_n <= len(POWER_VALUES):
        raise ValueError("power vocab size must be 1 or 2")
    if min(type_n, brand_n) < 1:
        raise ValueError("vocab sizes must be positive")

    vocabs = (
        label_pool("type", type_n),
        label_pool("brand", brand_n),
        list(MOBILITY_VALUES[:mob_n]),
        list(POWER_VALUES[:pow_n]),
    )

    rng = derive_rng(seed, "catalog")
    n_total = n_private + n_public
    owner_draw = rng.integers(0, max(n_owners, 1), size=max(n_total, 1))
    attr_draw = [rng.integers(0, len(v), size=max(n_total, 1)) for v in vocabs]

    records: list[DeviceRecord] = []
    for i in range(n_total):
        private = i < n_private
        records.append(
            DeviceRecord(
                device_id=i,
                owner_id=int(owner_draw[i]) if private else None,
                visibility="private" if private else "public",
                device_type=vocabs[0][attr_draw[0][i]],
                brand=vocabs[1][attr_draw[1][i]],
                mobility=vocabs[2][attr_draw[2][i]],
                power_supply=vocabs[3][attr_draw[3][i]],
            )
        )

    owner_ids = frozenset(r.owner_id for r in records if r.owner_id is not None)
    frng = derive_rng(seed, "friendships")
    pairs: set[tuple[int, int]] = set()
    if friendship_prob > 0.0 and n_owners > 1:
        for a in range(n_owners - 1):
            hits = np.nonzero(frng.random(n_owners - 1 - a) < friendship_prob)[0]
            for off in hits:
                b = a + 1 + int(off)
                if a in owner_ids and b in owner_ids:
                    pairs.add((a, b))
    return records, OwnerSocialNetwork(owners=owner_ids, friendships=frozenset(pairs))


def default_sample_filter(record: DeviceRecord) -> bool:
    """Private, stationary devices: the population the evaluation draws from."""
    return record.is_private and record.mobility == "static"


def sample_subnetwork(
    catalog: Sequence[DeviceRecord],
    owners: OwnerSocialNetwork,
    n: int,
    seed: int,
    predicate: Callable[[DeviceRecord], bool] | None = None,
) -> tuple[list[DeviceRecord], OwnerSocialNetwork]:
    """Uniformly sample ``n`` eligible devices without replacement.

    The sub-catalog preserves catalog order; the owner network is restricted
    to owners that still have a device. Raises InsufficientPopulation when
    fewer than ``n`` devices pass the filter.
    """
    if predicate is None:
        predicate = default_sample_filter
    eligible = [i for i, r in enumerate(catalog) if predicate(r)]
    if len(eligible) < n:
        raise InsufficientPopulation(
            f"need {n} devices, only {len(eligible)} pass the filter"
        )
    rng = derive_rng(seed, "sample")
    chosen = rng.choice(len(eligible), size=n, replace=False)
    picked = sorted(eligible[int(i)] for i in chosen)
    sub = [catalog[i] for i in picked]
    kept_owners = frozenset(r.owner_id for r in sub if r.owner_id is not None)
    return sub, owners.restricted_to(kept_owners)


def write_device_csv(records: Iterable[DeviceRecord], target: str | Path | TextIO) -> None:
    stream, close_me = _open_for_write(target)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(DEVICE_CSV_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.device_id,
                    "" if r.owner_id is None else r.owner_id,
                    r.visibility,
                    r.device_type,
                    r.brand,
                    r.mobility,
                    r.power_supply,
                ]
            )
    finally:
        if close_me:
            stream.close()


def write_friendship_csv(owners: OwnerSocialNetwork, target: str | Path | TextIO) -> None:
    stream, close_me = _open_for_write(target)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(FRIENDSHIP_CSV_HEADER)
        for a, b in sorted(owners.friendships):
            writer.writerow([a, b])
    finally:
        if close_me:
            stream.close()


def _open_for_write(target: str | Path | TextIO) -> tuple[TextIO, bool]:
    if isinstance(target, (str, Path)):
        return open(target, "w", newline=""), True
    return target, False


def catalog_to_csv_text(records: Iterable[DeviceRecord]) -> str:
    buf = io.StringIO()
    write_device_csv(records, buf)
    return buf.getvalue()
