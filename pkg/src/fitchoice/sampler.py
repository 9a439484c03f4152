"""Dynamic categorical sampling over vertex weights degree+beta.

A Fenwick (binary indexed) tree over real weights gives O(log N) draws and
O(log N) weight updates for the full beta > -1 range; the classic
endpoint-list mixture trick only works for beta >= 0. Floating drift is
bounded by a periodic rebuild from true weights plus a closed-form total
check performed by the owning tree state.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as _k
from ._rng import RngState

REBUILD_PERIOD = _k.REBUILD_PERIOD

_MIN_CAPACITY = 16


class SamplerError(ValueError):
    pass


def _pow2_at_least(n: int) -> int:
    cap = _MIN_CAPACITY
    while cap < n:
        cap *= 2
    return cap


class WeightedIndex:
    """Prefix-sum tree over one positive real weight per vertex.

    Leaf i holds degree(v_i)+beta. Sampling consumes exactly one uniform
    variate per draw. `updates` counts weight increments; every
    REBUILD_PERIOD of them the tree is rebuilt from the leaf weights
    (or from externally supplied true weights, see `rebuild`).
    """

    __slots__ = ("beta", "size", "cap", "tree", "leaf", "counters")

    def __init__(self, weights: np.ndarray, beta: float):
        weights = np.asarray(weights, np.float64)
        if weights.size and weights.min() <= 0.0:
            raise SamplerError(
                f"all weights must be positive, got min {weights.min()}")
        self.beta = float(beta)
        self.size = int(weights.size)
        self.cap = _pow2_at_least(self.size)
        self.tree = np.zeros(self.cap + 1, np.float64)
        self.leaf = np.zeros(self.cap, np.float64)
        self.leaf[: self.size] = weights
        self.counters = np.zeros(3, np.int64)
        _k.fenwick_build(self.tree, self.cap, self.leaf, self.size)

    # -- queries ---------------------------------------------------------

    def __len__(self) -> int:
        return self.size

    @property
    def total(self) -> float:
        return float(self.tree[self.cap])

    @property
    def updates(self) -> int:
        return int(self.counters[_k.CNT_UPDATES])

    @property
    def rebuilds(self) -> int:
        return int(self.counters[_k.CNT_REBUILDS])

    def weight(self, v: int) -> float:
        return float(self.leaf[v])

    def weights(self) -> np.ndarray:
        return self.leaf[: self.size].copy()

    # -- mutation --------------------------------------------------------

    def sample(self, rng: RngState) -> int:
        if self.size == 0:
            raise SamplerError("cannot sample from an empty index")
        return int(_k.sample_leaf(self.tree, self.cap, self.size, rng.s))

    def increment(self, v: int) -> None:
        """Weight of v += 1 (a degree increment), with rebuild cadence."""
        if not 0 <= v < self.size:
            raise SamplerError(f"vertex {v} out of range")
        self.leaf[v] += 1.0
        _k.fenwick_add(self.tree, self.cap, v, 1.0)
        self.counters[_k.CNT_UPDATES] += 1
        if self.counters[_k.CNT_UPDATES] % REBUILD_PERIOD == 0:
            self.rebuild()

    def append(self) -> int:
        """New leaf with weight 1+beta; returns its index."""
        w = 1.0 + self.beta
        if w <= 0.0:
            raise SamplerError("beta must exceed -1")
        if self.size == self.cap:
            self._grow(self.cap * 2)
        v = self.size
        self.leaf[v] = w
        _k.fenwick_add(self.tree, self.cap, v, w)
        self.size += 1
        return v

    def rebuild(self, true_weights: np.ndarray | None = None) -> None:
        """Recompute the tree; optionally refresh leaves from true weights."""
        if true_weights is not None:
            self.leaf[: self.size] = true_weights
        _k.fenwick_build(self.tree, self.cap, self.leaf, self.size)
        self.counters[_k.CNT_REBUILDS] += 1

    def reserve(self, n_leaves: int) -> None:
        """Grow capacity (by doubling) until at least n_leaves fit."""
        if n_leaves <= self.cap:
            return
        cap = self.cap
        while cap < n_leaves:
            cap *= 2
        self._grow(cap)

    def _grow(self, new_cap: int) -> None:
        tree = np.zeros(new_cap + 1, np.float64)
        leaf = np.zeros(new_cap, np.float64)
        leaf[: self.size] = self.leaf[: self.size]
        self.tree, self.leaf, self.cap = tree, leaf, new_cap
        _k.fenwick_build(self.tree, self.cap, self.leaf, self.size)


def build_index(degrees: np.ndarray, beta: float) -> WeightedIndex:
    """Index with leaf weights degrees[i]+beta."""
    degrees = np.asarray(degrees)
    if beta <= -1.0:
        raise SamplerError(f"beta must exceed -1, got {beta}")
    if degrees.size and degrees.min() < 1:
        raise SamplerError("all degrees must be >= 1")
    return WeightedIndex(degrees.astype(np.float64) + beta, beta)


def sample_vertex(index: WeightedIndex, rng: RngState) -> int:
    return index.sample(rng)


def increment_degree(index: WeightedIndex, v: int) -> None:
    index.increment(v)


def append_vertex(index: WeightedIndex, beta: float | None = None) -> int:
    if beta is not None and beta != index.beta:
        raise SamplerError("beta mismatch with index")
    return index.append()


def oracle_sample(degrees: np.ndarray, beta: float, rng: RngState,
                  n_draws: int = 1) -> np.ndarray:
    """Linear-scan cumulative-sum draws; test oracle for sample_vertex."""
    weights = np.asarray(degrees, np.float64) + beta
    out = np.zeros(n_draws, np.int64)
    _k.linear_scan_fill(weights, weights.size, rng.s, out)
    return out
