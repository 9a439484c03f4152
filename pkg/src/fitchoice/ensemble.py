"""Seeded replica orchestration and cross-replica aggregation.

Replica i of an ensemble always runs with the seed derived from
(master_seed, i), and results are merged in replica order, never in
completion order, so an identical spec yields a bit-identical result at
any parallelism degree. Workers are threads: one growth step runs with
the interpreter lock released, so replicas overlap on multicore hosts
while each TreeState stays single-threaded.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._rng import derive_replica_seed
from .analysis import RegimeReport, quantile_nearest_rank, regime_report
from .model import (CheckpointSchedule, ModelParams, ParamError, init_state,
                    run)
from .observables import Checkpoint

QUANTITIES = ("M", "Z", "M_logn_over_n", "M_over_n_exp", "X")
AGGREGATES = ("mean", "min", "max", "q05", "q50", "q95")


class EnsembleError(RuntimeError):
    pass


@dataclass(frozen=True)
class EnsembleSpec:
    params: ModelParams
    replicas: int
    target_edges: int
    master_seed: int
    schedule: CheckpointSchedule = field(default_factory=CheckpointSchedule)
    parallelism: int = 1

    def __post_init__(self):
        if not isinstance(self.replicas, int) or self.replicas < 1:
            raise ParamError(
                f"replicas must be an integer >= 1, got {self.replicas!r}")
        if not isinstance(self.target_edges, int) or self.target_edges < 2:
            raise ParamError(
                f"target_edges must be an integer >= 2, got {self.target_edges!r}")
        if not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise ParamError(
                f"master_seed must be a nonnegative integer, got {self.master_seed!r}")
        if not isinstance(self.parallelism, int) or self.parallelism < 1:
            raise ParamError(
                f"parallelism must be an integer >= 1, got {self.parallelism!r}")


@dataclass(frozen=True)
class EnsembleResult:
    """Merged ensemble output.

    stats maps "<quantity>_<aggregate>" (e.g. "Z_q50") to one value per
    checkpoint, aligned with checkpoint_ns. hub_stabilization holds, per
    replica, the earliest recorded n from which (hub_low, hub_high) stays
    constant through the end of the run.
    """

    spec: EnsembleSpec
    checkpoint_ns: tuple[int, ...]
    stats: dict[str, tuple[float, ...]]
    hub_stabilization: tuple[int, ...]
    report: RegimeReport
    trajectories: tuple[tuple[Checkpoint, ...], ...]


def replica_trajectory(spec: EnsembleSpec, replica: int) -> tuple[Checkpoint, ...]:
    """Run one replica to completion and return its checkpoint stream."""
    seed = derive_replica_seed(spec.master_seed, replica)
    state = init_state(spec.params, seed)
    trajectory: list[Checkpoint] = []
    run(state, spec.target_edges, spec.schedule, sink=trajectory.append)
    return tuple(trajectory)


def run_ensemble(spec: EnsembleSpec) -> EnsembleResult:
    """Run all replicas and aggregate; deterministic for a fixed spec."""

    def one(replica: int) -> tuple[Checkpoint, ...]:
        try:
            return replica_trajectory(spec, replica)
        except Exception as exc:
            raise EnsembleError(f"replica {replica} failed: {exc}") from exc

    if spec.parallelism == 1:
        trajectories = tuple(one(i) for i in range(spec.replicas))
    else:
        with ThreadPoolExecutor(max_workers=spec.parallelism) as pool:
            trajectories = tuple(pool.map(one, range(spec.replicas)))
    return aggregate(trajectories, spec)


def hub_stabilization_step(trajectory: Sequence[Checkpoint]) -> int:
    """Earliest recorded n from which both hub identities never change."""
    final = (trajectory[-1].hub_low, trajectory[-1].hub_high)
    step = trajectory[-1].n
    for cp in reversed(trajectory):
        if (cp.hub_low, cp.hub_high) != final:
            break
        step = cp.n
    return step


def _normalizers(params: ModelParams):
    exponent = params.d / (2.0 + params.beta)
    return {
        "M": lambda cp: float(cp.M),
        "Z": lambda cp: cp.Z,
        "M_logn_over_n": lambda cp: cp.M * math.log(cp.n) / cp.n,
        "M_over_n_exp": lambda cp: cp.M / cp.n ** exponent,
        "X": lambda cp: cp.X,
    }


def aggregate(trajectories: Sequence[Sequence[Checkpoint]],
              spec: EnsembleSpec) -> EnsembleResult:
    """Exact cross-replica statistics on a shared checkpoint grid.

    Quantiles use the nearest-rank convention (exact order statistics).
    All trajectories must record exactly the same n values.
    """
    if len(trajectories) != spec.replicas:
        raise EnsembleError(
            f"expected {spec.replicas} trajectories, got {len(trajectories)}")
    grids = {tuple(cp.n for cp in t) for t in trajectories}
    if len(grids) != 1:
        raise EnsembleError("checkpoint schedule mismatch across replicas")
    checkpoint_ns = grids.pop()
    if not checkpoint_ns:
        raise EnsembleError("empty checkpoint streams")

    norms = _normalizers(spec.params)
    stats: dict[str, list[float]] = {
        f"{q}_{a}": [] for q in QUANTITIES for a in AGGREGATES}
    for j in range(len(checkpoint_ns)):
        column = [t[j] for t in trajectories]
        for q in QUANTITIES:
            values = [norms[q](cp) for cp in column]
            stats[f"{q}_mean"].append(float(np.mean(values)))
            stats[f"{q}_min"].append(min(values))
            stats[f"{q}_max"].append(max(values))
            stats[f"{q}_q05"].append(quantile_nearest_rank(values, 0.05))
            stats[f"{q}_q50"].append(quantile_nearest_rank(values, 0.50))
            stats[f"{q}_q95"].append(quantile_nearest_rank(values, 0.95))

    return EnsembleResult(
        spec=spec,
        checkpoint_ns=tuple(checkpoint_ns),
        stats={k: tuple(v) for k, v in stats.items()},
        hub_stabilization=tuple(
            hub_stabilization_step(t) for t in trajectories),
        report=regime_report(spec.params, trajectories),
        trajectories=tuple(tuple(t) for t in trajectories),
    )
