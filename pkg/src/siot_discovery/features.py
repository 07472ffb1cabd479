"""One-hot feature encoding of device attributes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .catalog import ATTRIBUTE_FIELDS, DeviceRecord
from .errors import UnknownDevice


@dataclass(frozen=True)
class FeatureEncoding:
    """Per-device one-hot blocks, one block per attribute.

    Rows are aligned with catalog order, which is also the node order of the
    graph built from the same catalog. The matrix is treated as immutable.
    """

    device_ids: tuple[int, ...]
    vocabularies: tuple[tuple[str, ...], ...]
    matrix: np.ndarray
    _row_of: dict[int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "_row_of", {d: i for i, d in enumerate(self.device_ids)}
        )

    @property
    def n_devices(self) -> int:
        return len(self.device_ids)

    @property
    def width(self) -> int:
        """Total one-hot width, the sum of vocabulary sizes."""
        return int(sum(len(v) for v in self.vocabularies))

    def block_slices(self) -> tuple[slice, ...]:
        out = []
        start = 0
        for vocab in self.vocabularies:
            out.append(slice(start, start + len(vocab)))
            start += len(vocab)
        return tuple(out)

    def row_for(self, device_id: int) -> np.ndarray:
        try:
            return self.matrix[self._row_of[device_id]]
        except KeyError:
            raise UnknownDevice(f"device {device_id} is not encoded") from None

    def row_index(self, device_id: int) -> int:
        try:
            return self._row_of[device_id]
        except KeyError:
            raise UnknownDevice(f"device {device_id} is not encoded") from None

    def encode_values(self, values: Mapping[str, str] | Sequence[str]) -> np.ndarray:
        """One-hot vector for explicit attribute values (e.g. a service request)."""
        if isinstance(values, Mapping):
            ordered = [values[f] for f in ATTRIBUTE_FIELDS]
        else:
            ordered = list(values)
        if len(ordered) != len(self.vocabularies):
            raise ValueError(f"need {len(self.vocabularies)} attribute values")
        vec = np.zeros(self.width, dtype=np.float64)
        for value, vocab, block in zip(ordered, self.vocabularies, self.block_slices()):
            try:
                offset = vocab.index(value)
            except ValueError:
                raise ValueError(f"value {value!r} not in vocabulary {vocab}") from None
            vec[block.start + offset] = 1.0
        return vec

    def matching_blocks(self, a: np.ndarray, b: np.ndarray) -> int:
        """How many attribute blocks agree between two one-hot rows."""
        hits = 0
        for block in self.block_slices():
            if np.array_equal(a[block], b[block]):
                hits += 1
        return hits

    def is_valid_one_hot(self, vec: np.ndarray) -> bool:
        if vec.shape != (self.width,):
            return False
        for block in self.block_slices():
            chunk = vec[block]
            if not (np.all((chunk == 0.0) | (chunk == 1.0)) and chunk.sum() == 1.0):
                return False
        return True

    def with_row(self, device_id: int, row: np.ndarray) -> "FeatureEncoding":
        """New encoding with one extra device appended (used for fake nodes)."""
        if device_id in self._row_of:
            raise ValueError(f"device {device_id} already encoded")
        if not self.is_valid_one_hot(np.asarray(row, dtype=np.float64)):
            raise ValueError("appended row is not a valid one-hot feature vector")
        return FeatureEncoding(
            device_ids=self.device_ids + (device_id,),
            vocabularies=self.vocabularies,
            matrix=np.vstack([self.matrix, np.asarray(row, dtype=np.float64)]),
        )

    def without_last_row(self) -> "FeatureEncoding":
        if self.n_devices == 0:
            raise ValueError("encoding is empty")
        return FeatureEncoding(
            device_ids=self.device_ids[:-1],
            vocabularies=self.vocabularies,
            matrix=self.matrix[:-1].copy(),
        )


def encode_features(catalog: Sequence[DeviceRecord]) -> FeatureEncoding:
    """Build the one-hot encoding for a catalog.

    Vocabularies are the sorted distinct values present, per attribute, so the
    encoding is a pure function of the catalog.
    """
    vocabularies = tuple(
        tuple(sorted({getattr(r, f) for r in catalog})) for f in ATTRIBUTE_FIELDS
    )
    width = sum(len(v) for v in vocabularies)
    matrix = np.zeros((len(catalog), width), dtype=np.float64)
    offsets = []
    start = 0
    for vocab in vocabularies:
        offsets.append((start, {v: i for i, v in enumerate(vocab)}))
        start += len(vocab)
    for row, record in enumerate(catalog):
        for (base, index), f in zip(offsets, ATTRIBUTE_FIELDS):
            matrix[row, base + index[getattr(record, f)]] = 1.0
    return FeatureEncoding(
        device_ids=tuple(r.device_id for r in catalog),
        vocabularies=vocabularies,
        matrix=matrix,
    )


@dataclass(frozen=True, eq=False)
class ServiceRequest:
    """A lookup query: who is asking, and the one-hot profile they want."""

    requester_id: int
    required_features: np.ndarray

    def validated_against(self, encoding: FeatureEncoding) -> "ServiceRequest":
        if self.requester_id not in encoding.device_ids:
            raise UnknownDevice(f"requester {self.requester_id} is not encoded")
        if not encoding.is_valid_one_hot(self.required_features):
            raise ValueError("required_features is not one-hot per attribute block")
        return self


def random_request(
    encoding: FeatureEncoding, rng: np.random.Generator
) -> ServiceRequest:
    """Random requester plus a uniformly random valid one-hot target profile."""
    requester = int(rng.choice(len(encoding.device_ids)))
    values = [vocab[int(rng.integers(len(vocab)))] for vocab in encoding.vocabularies]
    return ServiceRequest(
        requester_id=encoding.device_ids[requester],
        required_features=encoding.encode_values(values),
    )
