"""Deterministic random-stream derivation.

Every stochastic operation takes an explicit ``numpy.random.Generator``.
Pipelines that fan out over classes or samples derive one child stream per
entity from the master seed, keyed by stable identifiers, so results do not
depend on iteration or scheduling order.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_rng", "derive_seed_sequence"]


def _key_to_int(key: int | str) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key)
    digest = hashlib.sha256(str(key).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed_sequence(master_seed: int, *keys: int | str) -> np.random.SeedSequence:
    """Build a SeedSequence from a master seed plus stable entity keys."""
    entropy = [int(master_seed)] + [_key_to_int(k) for k in keys]
    return np.random.SeedSequence(entropy)


def derive_rng(master_seed: int, *keys: int | str) -> np.random.Generator:
    """Independent generator for the entity identified by ``keys``.

    Same (master_seed, keys) always yields the same stream; distinct key
    tuples yield statistically independent streams.
    """
    return np.random.default_rng(derive_seed_sequence(master_seed, *keys))
