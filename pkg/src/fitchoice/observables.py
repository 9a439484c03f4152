"""Tracked quantities: per-class degree maxima, hubs, and diagnostics.

The maxima, the counts of vertices attaining them, and the hub identities
are maintained incrementally inside the step kernel; snapshot() just reads
them out in O(1). Everything else here is an O(N) scan or a pure function
of a recorded trajectory, for tests and offline analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from . import _kernels as _k
from .model import ConsistencyError, FitnessClass, ParamError

if TYPE_CHECKING:
    from .model import TreeState


@dataclass(frozen=True)
class Checkpoint:
    """One trajectory sample point.

    M is the overall max degree, M1/Mlambda the per-class maxima (0 for an
    empty class), X = max(M1, lambda*Mlambda), Z = M/n. hub_low/hub_high
    are the lowest vertex ids attaining the class maxima (-1 for an empty
    class); the L fields count how many vertices attain each class maximum.
    """

    n: int
    M: int
    M1: int
    Mlambda: int
    X: float
    Z: float
    hub_low: int
    hub_high: int
    L1_at_max: int
    Llambda_at_max: int


@dataclass(frozen=True)
class DiagnosticSeries:
    """U_n = n*exp(-c*n/M(n)) and Y_n = exp(c*n/X_n)/n along a trajectory."""

    c: float
    n: np.ndarray
    U: np.ndarray
    Y: np.ndarray


@dataclass(frozen=True)
class DriftStats:
    """Windowed mean of consecutive-checkpoint U ratios minus 1."""

    mean: float
    stderr: float
    count: int


def snapshot(state: TreeState) -> Checkpoint:
    """O(1) checkpoint from the incrementally maintained maxima."""
    obs = state.obs
    lam = state.params.lam
    n = state.n_edges
    m1 = int(obs[_k.OBS_M1])
    mlam = int(obs[_k.OBS_MLAM])
    m = max(m1, mlam)
    x = max(float(m1), lam * mlam)
    assert x <= lam * m
    return Checkpoint(
        n=n,
        M=m,
        M1=m1,
        Mlambda=mlam,
        X=x,
        Z=m / n,
        hub_low=int(obs[_k.OBS_HUB_LOW]),
        hub_high=int(obs[_k.OBS_HUB_HIGH]),
        L1_at_max=int(obs[_k.OBS_L1]),
        Llambda_at_max=int(obs[_k.OBS_LLAM]),
    )


def scan_class_maxima(state: TreeState):
    """Full-scan recomputation of the incremental state, for verification.

    Returns (M1, L1, hub_low, Mlambda, Llambda, hub_high) with the
    empty-class convention (max 0, count 0, hub -1).
    """
    deg = state.degree_view()
    fit = state.fitness_view()
    out = []
    for cls in (FitnessClass.LOW, FitnessClass.HIGH):
        mask = fit == int(cls)
        if not mask.any():
            out.extend((0, 0, -1))
            continue
        dmax = int(deg[mask].max())
        at_max = mask & (deg == dmax)
        out.extend((dmax, int(at_max.sum()), int(np.nonzero(at_max)[0][0])))
    return tuple(out)


def verify_against_scan(state: TreeState) -> None:
    """Raise if the incremental maxima disagree with a full scan."""
    m1, l1, hub_low, mlam, llam, hub_high = scan_class_maxima(state)
    obs = state.obs
    got = (int(obs[_k.OBS_M1]), int(obs[_k.OBS_L1]), int(obs[_k.OBS_HUB_LOW]),
           int(obs[_k.OBS_MLAM]), int(obs[_k.OBS_LLAM]),
           int(obs[_k.OBS_HUB_HIGH]))
    want = (m1, l1, hub_low, mlam, llam, hub_high)
    if got != want:
        raise ConsistencyError(
            f"incremental maxima {got} != scanned {want} at n={state.n_edges}")


def tail_weight(state: TreeState, cls: FitnessClass, k: float) -> float:
    """Total weight deg+beta of class members with degree strictly above k."""
    if k < 0:
        raise ParamError(f"k must be nonnegative, got {k}")
    deg = state.degree_view()
    mask = (state.fitness_view() == int(cls)) & (deg > k)
    if not mask.any():
        return 0.0
    return float((deg[mask] + state.params.beta).sum())


def exclusivity_check(state: TreeState) -> bool:
    """True iff F1(lambda*Mlambda) = 0 or Flambda(M1/lambda) = 0.

    In words: no Low vertex out-weighs the scaled High maximum and
    simultaneously a High vertex out-weighs the scaled Low maximum.
    Holds on every reachable state; vacuously true with one class empty.
    """
    cp = snapshot(state)
    lam = state.params.lam
    f1 = tail_weight(state, FitnessClass.LOW, lam * cp.Mlambda)
    flam = tail_weight(state, FitnessClass.HIGH, cp.M1 / lam)
    return f1 == 0.0 or flam == 0.0


def diagnostics(trajectory: Sequence[Checkpoint], c: float) -> DiagnosticSeries:
    """Evaluate both diagnostic series at the recorded checkpoints.

    Y_n can overflow to inf for regimes where X_n grows sublinearly; that
    is reported as-is (the series only carries information near the
    critical regime).
    """
    if not c > 0:
        raise ParamError(f"c must be positive, got {c}")
    n = np.array([cp.n for cp in trajectory], np.float64)
    m = np.array([cp.M for cp in trajectory], np.float64)
    x = np.array([cp.X for cp in trajectory], np.float64)
    with np.errstate(over="ignore"):
        u = n * np.exp(-c * n / m)
        y = np.exp(c * n / x) / n
    return DiagnosticSeries(c=float(c), n=n, U=u, Y=y)


def u_drift(series: DiagnosticSeries, n_min: float, n_max: float) -> DriftStats:
    """Mean and standard error of U_{k+1}/U_k - 1 over a checkpoint window.

    A supermartingale U has non-positive expected drift, so the windowed
    mean should not exceed 0 by more than sampling noise.
    """
    n, u = series.n, series.U
    ratios = [u[i + 1] / u[i] - 1.0
              for i in range(len(n) - 1)
              if n[i] >= n_min and n[i + 1] <= n_max]
    if len(ratios) < 2:
        raise ParamError(
            f"need at least 2 ratios in window [{n_min}, {n_max}], "
            f"got {len(ratios)}")
    arr = np.asarray(ratios)
    return DriftStats(mean=float(arr.mean()),
                      stderr=float(arr.std(ddof=1) / np.sqrt(arr.size)),
                      count=arr.size)
