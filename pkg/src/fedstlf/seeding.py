"""Stable seed derivation: one master seed fans out to every consumer."""
from __future__ import annotations

import zlib

import numpy as np


def derive_seed(master_seed: int, *tags) -> int:
    """Child seed from a master seed and string/int tags (stable across processes)."""
    words = [int(master_seed) & 0xFFFFFFFF]
    words += [zlib.crc32(str(t).encode("utf-8")) for t in tags]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


def derive_rng(master_seed: int, *tags) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *tags))
