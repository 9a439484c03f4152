"""Core growth model: preferential attachment with fitness-based choice.

Each step samples d existing vertices with probability proportional to
degree+beta, attaches a new vertex to the sampled vertex maximizing
fitness_value * degree (ties broken uniformly at random over the sample
positions attaining the maximum), and assigns the newcomer an i.i.d.
fitness class: High (value lambda) with probability p_lambda, else Low
(value 1).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from ._rng import RngState
from .sampler import WeightedIndex

_INITIAL_CAPACITY = 16


class ParamError(ValueError):
    """A model parameter or precondition violates its documented bound."""


class SinkError(RuntimeError):
    """Wraps a failure raised by a checkpoint consumer during run()."""


class ConsistencyError(RuntimeError):
    """Internal state failed a self-check (should never happen)."""


class FitnessClass(enum.IntEnum):
    LOW = 0
    HIGH = 1


def fitness_value(fc: FitnessClass | int, lam: float) -> float:
    return lam if int(fc) == FitnessClass.HIGH else 1.0


@dataclass(frozen=True)
class ModelParams:
    """Growth-rule parameters.

    d: sample size per step, integer >= 2.
    beta: weight offset, beta > -1, so every weight deg+beta is positive.
    lam: High fitness value, lam >= 1 (1 is the pure-degree baseline).
    p_lambda: probability a new vertex is High, strictly inside (0, 1).
    """

    d: int
    beta: float = 0.0
    lam: float = 2.0
    p_lambda: float = 0.5

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or isinstance(self.d, bool):
            raise ParamError(f"d must be an integer >= 2, got {self.d!r}")
        if self.d < 2:
            raise ParamError(f"d must be an integer >= 2, got {self.d}")
        if not self.beta > -1.0:
            raise ParamError(f"beta must exceed -1, got {self.beta}")
        if not self.lam >= 1.0:
            raise ParamError(f"lambda must be at least 1, got {self.lam}")
        if not 0.0 < self.p_lambda < 1.0:
            raise ParamError(
                f"p_lambda must lie strictly in (0, 1), got {self.p_lambda}")


@dataclass(frozen=True)
class StepRecord:
    """What one growth step did.

    sample lists the d drawn vertices in draw order (repetition allowed);
    target is the argmax choice the new vertex attached to.
    """

    new_vertex: int
    new_fitness: FitnessClass
    sample: tuple[int, ...]
    target: int


@dataclass(frozen=True)
class CheckpointSchedule:
    """Geometric checkpoint grid {round(ratio**k)} plus pinned extras.

    points(target) returns the sorted grid restricted to (1, target],
    always including target itself so every run ends on a checkpoint.
    """

    ratio: float = 1.2
    extra: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.ratio > 1.0:
            raise ParamError(f"schedule ratio must exceed 1, got {self.ratio}")
        for e in self.extra:
            if not isinstance(e, (int, np.integer)) or e < 2:
                raise ParamError(
                    f"extra checkpoints must be integers >= 2, got {e!r}")

    def points(self, target_edges: int) -> list[int]:
        if target_edges < 2:
            raise ParamError(
                f"target_edges must be at least 2, got {target_edges}")
        pts = {target_edges}
        pts.update(e for e in self.extra if e <= target_edges)
        k = 0
        while True:
            v = round(self.ratio ** k)
            k += 1
            if v > target_edges:
                break
            if v > 1:
                pts.add(int(v))
        return sorted(pts)


def select_argmax(degrees, values, uniforms) -> int:
    """Reference comparator: position of max value*degree in a sample.

    Reservoir tie-break identical to the step kernel: uniforms[j] is
    consumed only when position j ties the running maximum, and replaces
    it with probability 1/(ties so far). Exposed so tests can probe the
    selection rule in isolation (e.g. scale invariance of the values).
    """
    best_w = -1.0
    best_j = -1
    ties = 1
    for j in range(len(degrees)):
        w = float(values[j]) * float(degrees[j])
        if w > best_w:
            best_w = w
            best_j = j
            ties = 1
        elif w == best_w:
            ties += 1
            if float(uniforms[j]) * ties < 1.0:
                best_j = j
    return best_j


class TreeState:
    """The evolving tree plus everything needed to grow it.

    Arrays are preallocated to a power-of-two capacity shared with the
    sampler index and doubled on demand; n_edges + 1 entries are live.
    Strictly single-threaded; distinct instances are independent.
    """

    __slots__ = ("params", "n_edges", "degrees", "fitness", "parent",
                 "sampler", "rng", "obs", "_sample_buf")

    def __init__(self, params: ModelParams, rng: RngState,
                 root_fitness: tuple[FitnessClass, FitnessClass]):
        self.params = params
        self.rng = rng
        self.n_edges = 1
        cap = _INITIAL_CAPACITY
        self.degrees = np.zeros(cap, np.int64)
        self.fitness = np.zeros(cap, np.uint8)
        self.parent = np.full(cap, -1, np.int64)
        self.obs = np.zeros(6, np.int64)
        self.obs[_k.OBS_HUB_LOW] = -1
        self.obs[_k.OBS_HUB_HIGH] = -1
        self._sample_buf = np.zeros(params.d, np.int64)

        f0, f1 = (int(root_fitness[0]), int(root_fitness[1]))
        self.degrees[0] = self.degrees[1] = 1
        self.fitness[0] = f0
        self.fitness[1] = f1
        self.parent[1] = 0
        w = 1.0 + params.beta
        self.sampler = WeightedIndex(np.array([w, w]), params.beta)
        assert self.sampler.cap == cap
        _k._obs_new_vertex(self.obs, f0, 0)
        _k._obs_new_vertex(self.obs, f1, 1)

    @property
    def n_vertices(self) -> int:
        return self.n_edges + 1

    def degree_view(self) -> np.ndarray:
        return self.degrees[: self.n_vertices]

    def fitness_view(self) -> np.ndarray:
        return self.fitness[: self.n_vertices]

    def parent_view(self) -> np.ndarray:
        return self.parent[: self.n_vertices]

    def _ensure_capacity(self, n_vertices: int) -> None:
        cap = self.sampler.cap
        if n_vertices <= cap:
            return
        while cap < n_vertices:
            cap *= 2
        degrees = np.zeros(cap, np.int64)
        fitness = np.zeros(cap, np.uint8)
        parent = np.full(cap, -1, np.int64)
        live = self.n_vertices
        degrees[:live] = self.degrees[:live]
        fitness[:live] = self.fitness[:live]
        parent[:live] = self.parent[:live]
        self.degrees, self.fitness, self.parent = degrees, fitness, parent
        self.sampler.reserve(cap)

    def _advance(self, n_stop: int) -> None:
        """Grow to n_stop edges through the compiled step loop."""
        self._ensure_capacity(n_stop + 1)
        p = self.params
        s = self.sampler
        reached = _k.advance(s.tree, s.leaf, s.cap, self.degrees,
                             self.fitness, self.parent, self.obs, self.rng.s,
                             s.counters, self.n_edges, n_stop, p.d, p.beta,
                             p.lam, p.p_lambda, self._sample_buf)
        self.n_edges = int(reached)
        s.size = self.n_edges + 1
        if s.counters[_k.CNT_ERROR]:
            raise ConsistencyError(
                f"sampler total drifted from closed form at n={self.n_edges}")


def init_state(params: ModelParams, seed: int,
               root_fitness: tuple[FitnessClass, FitnessClass] | None = None,
               ) -> TreeState:
    """Initial two-vertex graph with one edge, both degrees 1.

    The two starting fitness classes are drawn i.i.d. like every later
    vertex unless root_fitness pins them (deterministic tests); pinning
    consumes no random draws.
    """
    rng = RngState.from_seed(seed)
    if root_fitness is None:
        f0 = FitnessClass.HIGH if rng.uniform() < params.p_lambda else FitnessClass.LOW
        f1 = FitnessClass.HIGH if rng.uniform() < params.p_lambda else FitnessClass.LOW
    else:
        f0, f1 = (FitnessClass(int(root_fitness[0])),
                  FitnessClass(int(root_fitness[1])))
    return TreeState(params, rng, (f0, f1))


def evolve_step(state: TreeState) -> StepRecord:
    """One growth step; returns what happened."""
    state._advance(state.n_edges + 1)
    nv = state.n_edges
    record = StepRecord(
        new_vertex=nv,
        new_fitness=FitnessClass(int(state.fitness[nv])),
        sample=tuple(int(v) for v in state._sample_buf),
        target=int(state.parent[nv]),
    )
    assert record.target in record.sample
    assert _target_attains_max(state, record)
    return record


def _target_attains_max(state: TreeState, record: StepRecord) -> bool:
    """Target maximizes fitness_value*degree over the sample (pre-step)."""
    lam = state.params.lam

    def weight(v):
        deg = int(state.degrees[v]) - (1 if v == record.target else 0)
        return deg * lam if state.fitness[v] == 1 else float(deg)

    wt = weight(record.target)
    return all(wt >= weight(v) for v in record.sample)


def run(state: TreeState, target_edges: int, schedule: CheckpointSchedule,
        sink=None, verify: bool = False) -> TreeState:
    """Grow to target_edges, emitting a Checkpoint at every scheduled n.

    sink is any callable taking a Checkpoint; its failures abort the run
    wrapped in SinkError (the state itself stays consistent). verify=True
    additionally cross-checks the incremental maxima against a full scan
    at every checkpoint.
    """
    from .observables import exclusivity_check, snapshot, verify_against_scan

    if target_edges <= state.n_edges:
        raise ParamError(
            f"target_edges must exceed current n_edges={state.n_edges}, "
            f"got {target_edges}")
    for point in schedule.points(target_edges):
        if point <= state.n_edges:
            continue
        state._advance(point)
        if verify:
            verify_against_scan(state)
            if not exclusivity_check(state):
                raise ConsistencyError(
                    f"class-exclusivity violated at n={state.n_edges}")
        if sink is not None:
            cp = snapshot(state)
            try:
                sink(cp)
            except Exception as exc:
                raise SinkError(
                    f"checkpoint sink failed at n={state.n_edges}") from exc
    return state
