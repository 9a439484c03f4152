"""Seedable, splittable generator state shared with the jitted kernels."""

from __future__ import annotations

import numpy as np

from . import _kernels as _k

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


def derive_replica_seed(master_seed: int, replica: int) -> int:
    """Seed for replica i: a bijective 64-bit mix of (master_seed, i).

    For a fixed master seed the map i -> seed is injective, so two replicas
    of one ensemble can never collide.
    """
    return _mix64((master_seed + (replica + 1) * _GAMMA) & _MASK64)


class RngState:
    """xoshiro256++ state; all draws happen inside the jitted kernels."""

    __slots__ = ("s",)

    def __init__(self, s: np.ndarray):
        self.s = s

    @classmethod
    def from_seed(cls, seed: int) -> "RngState":
        s = np.zeros(4, np.uint64)
        _k.seed_state(s, np.uint64(seed & _MASK64))
        return cls(s)

    def uniform(self) -> float:
        return float(_k.rng_uniform(self.s))

    def next_u64(self) -> int:
        return int(_k.rng_next(self.s))

    def clone(self) -> "RngState":
        return RngState(self.s.copy())
