"""Deterministic counter-based random streams.

Every stochastic routine in the package draws from an independent Philox
(4x64 counter-based) stream derived from a user seed plus an integer path
identifying the logical role of the draw (stage, variable, group, slot).
Streams are independent by construction, so consuming values from one
stream never shifts the values produced by another.  That is what makes
simulation output reproducible across platforms and lets callers assert
bitwise equality between runs that only differ in which variables are
clamped.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream", "spawn_seed"]


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the Philox generator for (seed, *path).

    The same arguments always yield a generator producing the identical
    sequence.  Path components must be nonnegative integers.
    """
    if any(p < 0 for p in path):
        raise ValueError(f"stream path must be nonnegative, got {path}")
    seq = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, path)])
    return np.random.Generator(np.random.Philox(seq))


def spawn_seed(seed: int, *path: int) -> int:
    """Derive a stable 63-bit child seed from (seed, *path)."""
    seq = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, path)])
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> 1)
