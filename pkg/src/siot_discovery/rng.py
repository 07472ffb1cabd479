"""Deterministic RNG derivation.

Every stochastic stage derives its generator from a master seed plus a
string/int key path, so results never depend on call order, batching, or
thread scheduling.
"""

from __future__ import annotations

import zlib

import numpy as np


def _as_entropy(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    # SeedSequence wants non-negative ints
    return part & 0xFFFFFFFFFFFFFFFF


def subseed(*parts: int | str) -> np.random.SeedSequence:
    """Build a SeedSequence from a key path like (seed, "walks", node, rep)."""
    return np.random.SeedSequence([_as_entropy(p) for p in parts])


def derive_rng(*parts: int | str) -> np.random.Generator:
    """Generator seeded from a key path; same path, same stream, any platform."""
    return np.random.default_rng(subseed(*parts))
