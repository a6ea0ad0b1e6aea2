"""Deterministic derivation of child seeds from a root seed.

Every stochastic component takes an explicit integer seed. Components that
need several independent streams derive them with `derive_seed`, which mixes
the parent seed with string or integer tags through `numpy.random.SeedSequence`
so the streams are decorrelated but reproducible across runs and platforms.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _as_entropy(part: int | str) -> int:
    if isinstance(part, bool):
        raise TypeError("bool is not a valid seed part")
    if isinstance(part, int):
        if part < 0:
            raise ValueError(f"seed parts must be non-negative, got {part}")
        return part
    if isinstance(part, str):
        digest = hashlib.blake2s(part.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    raise TypeError(f"seed parts must be int or str, got {type(part).__name__}")


def derive_seed(*parts: int | str) -> int:
    """Mix the given parts into a single 32-bit seed."""
    if not parts:
        raise ValueError("derive_seed needs at least one part")
    entropy = [_as_entropy(p) for p in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
