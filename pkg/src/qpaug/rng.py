"""Deterministic random stream derivation.

Every sampling site in the library derives its own generator from a base seed
plus a context key (instance index, operation name, ...), so results do not
depend on call order or parallel scheduling.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & 0xFFFFFFFFFFFFFFFF
    if isinstance(key, str):
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"rng key must be int or str, got {type(key).__name__}")


def derive_rng(*keys) -> np.random.Generator:
    """Build a Generator whose stream is a pure function of the key tuple."""
    if not keys:
        raise ValueError("at least one key is required")
    entropy = [_key_to_int(k) for k in keys]
    return np.random.Generator(np.random.Philox(key=None, counter=0, seed=np.random.SeedSequence(entropy)))


def derive_seed(*keys) -> int:
    """Collapse a key tuple to a stable 63-bit integer seed."""
    entropy = [_key_to_int(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0] >> 1)
