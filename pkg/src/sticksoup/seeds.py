"""Deterministic 64-bit seed derivation for parallel-safe Monte Carlo trials."""

from __future__ import annotations

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One SplitMix64 avalanche step; full-period bijection on 64-bit ints."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_seed(master_seed: int, *indices: int) -> int:
    """Mix a master seed with trial indices into an independent 64-bit seed.

    The derivation is pure, so trials may run in any order (or concurrently)
    and still see the same per-trial stream.
    """
    s = splitmix64(master_seed & _MASK)
    for i in indices:
        s = splitmix64(s ^ splitmix64((i & _MASK) ^ 0xA5A5A5A5A5A5A5A5))
    return s
