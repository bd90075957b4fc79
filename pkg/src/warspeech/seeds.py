"""Deterministic seed derivation.

Every stage and substream derives its seed from (parent_seed, tag) so
stages can rerun independently without sharing or reusing random streams.
"""

import hashlib

_MASK63 = (1 << 63) - 1


def derive_seed(seed: int, tag: str) -> int:
    """Derive a child seed from a parent seed and a stream tag.

    Stable across runs and platforms; result is a nonnegative 63-bit int
    accepted by numpy's default_rng.
    """
    key = (seed & ((1 << 64) - 1)).to_bytes(8, "little")
    h = hashlib.blake2b(tag.encode("utf-8"), digest_size=8, key=key)
    return int.from_bytes(h.digest(), "little") & _MASK63
