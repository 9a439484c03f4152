"""Deterministic theory functions and regime-level trajectory analysis.

The growth rule has three asymptotic regimes for the maximum degree,
separated by the sign of d - (2+beta): sublinear n^{d/(2+beta)}, critical
n/ln n, and linear x*.n where x* is the unique positive root of
1 - (1 - x/(2+beta))^d = x. This module evaluates the comparison
functions f_n and g_n, solves for x*, classifies parameters, fits
power-law exponents from recorded trajectories, and renders verdicts on
whether an ensemble's trajectories land in the predicted bands.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .model import ModelParams
from .observables import Checkpoint

CRITICAL_TOL = 1e-12
XSTAR_TOL = 1e-12
BRACKET_TOL = 1e-15

SUBLINEAR_SLACK = 0.08
CRITICAL_WIDEN = (0.8, 1.5)
CRITICAL_EXPONENT_GATE = (0.85, 1.0)
LINEAR_SLACK = 0.05
LINEAR_DRIFT_MAX = 0.02

MIN_FIT_POINTS = 10


class AnalysisError(ValueError):
    pass


class Regime(enum.Enum):
    SUBLINEAR = "sublinear"
    CRITICAL = "critical"
    LINEAR = "linear"


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    stderr: float


@dataclass(frozen=True)
class RegimeReport:
    """Regime classification plus band-compliance verdicts for an ensemble.

    bands is the theoretical band in band_units; verdicts apply the
    documented acceptance slack (sublinear: exponent within the band;
    critical: final median within [0.8*lower, 1.5*upper] and exponent in
    (0.85, 1.0); linear: final median within [lower - 0.05, upper + 0.05]
    and median |Z(final) - Z(final/10)| < 0.02).
    """

    regime: Regime
    x_star: float | None
    exponent_fit: ExponentFit | None
    bands: tuple[float, float]
    band_units: str
    final_median: float
    n_final: int
    window: tuple[float, float]
    verdicts: dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())


def classify(params: ModelParams) -> Regime:
    """Which asymptotic regime the parameters fall in.

    The boundary comparison d vs 2+beta uses tolerance 1e-12 so that
    real-valued beta inputs arising from parsed text classify sanely;
    integer beta classifies exactly.
    """
    gap = params.d - (2.0 + params.beta)
    if abs(gap) <= CRITICAL_TOL:
        return Regime.CRITICAL
    return Regime.LINEAR if gap > 0 else Regime.SUBLINEAR


def _check_domain(x: float, y: float, n: int, params: ModelParams) -> float:
    if n < 1:
        raise AnalysisError(f"n must be a positive integer, got {n}")
    s = (2.0 + params.beta) * n
    if x < 0 or y < 0 or x + y > s:
        raise AnalysisError(
            f"need x, y >= 0 and x + y <= (2+beta)n = {s}, got x={x}, y={y}")
    return s


def eval_f(x: float, y: float, n: int, params: ModelParams) -> float:
    """f_n(x, y) = (1 - y/s)^d - (1 - (x+y)/s)^d with s = (2+beta)n."""
    s = _check_domain(x, y, n, params)
    d = params.d
    return (1.0 - y / s) ** d - (1.0 - (x + y) / s) ** d


def eval_g(x: float, y: float, n: int, params: ModelParams) -> float:
    """g_n(x, y) = sum_{k=0}^{d-1} (1 - y/s)^k (1 - (x+y)/s)^{d-1-k}.

    Satisfies the telescoping identity f_n = (x/s) g_n, since the two
    bases differ by exactly x/s.
    """
    s = _check_domain(x, y, n, params)
    d = params.d
    a = 1.0 - y / s
    b = 1.0 - (x + y) / s
    return math.fsum(a ** k * b ** (d - 1 - k) for k in range(d))


def g_expansion_check(x: float, n: int, params: ModelParams) -> float:
    """Residual of g_n(x, 0) against its first-order expansion in x/n.

    Returns g_n(x,0) - [d - (d(d-1)/2) x/((2+beta)n)]; quadratically
    small in x/n, and identically zero for d = 2 where the expansion
    terminates.
    """
    s = _check_domain(x, 0.0, n, params)
    d = params.d
    return eval_g(x, 0.0, n, params) - (d - 0.5 * d * (d - 1) * x / s)


def solve_xstar(params: ModelParams) -> float | None:
    """Unique positive root of 1 - (1 - x/(2+beta))^d = x, if one exists.

    h(x) = 1 - (1 - x/(2+beta))^d - x is concave with h(0) = 0 and
    h'(0) = d/(2+beta) - 1, so a positive root exists exactly in the
    linear regime d > 2+beta; bisection on the bracket
    (1e-15, 2+beta-1e-15) converges to absolute tolerance 1e-12.
    """
    if classify(params) is not Regime.LINEAR:
        return None
    s = 2.0 + params.beta
    d = params.d

    def h_sign(x: float) -> float:
        # For x > 0, h factors exactly as x * ((1/s) sum_k (1-x/s)^k - 1)
        # over k < d. The direct power difference loses the sign of h
        # once x/s drops below machine epsilon; the factored form never
        # cancels, so the bracket endpoints stay reliable.
        a = 1.0 - x / s
        return math.fsum(a ** k for k in range(d)) / s - 1.0

    lo, hi = BRACKET_TOL, s - BRACKET_TOL
    if not (h_sign(lo) > 0.0 > h_sign(hi)):
        raise AnalysisError("root bracket failed; parameters out of range")
    while hi - lo > XSTAR_TOL:
        mid = 0.5 * (lo + hi)
        if h_sign(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bands(params: ModelParams) -> tuple[float, float]:
    """Theoretical (lower, upper) band in the regime's natural units.

    Sublinear: fitted-exponent window d/(2+beta) +/- 0.08. Critical:
    (2d/((d-1) lambda), 2d/(d-1)) for M ln n / n. Linear: (x*/lambda, x*)
    for M/n.
    """
    regime = classify(params)
    d, lam = params.d, params.lam
    if regime is Regime.SUBLINEAR:
        t = d / (2.0 + params.beta)
        return (t - SUBLINEAR_SLACK, t + SUBLINEAR_SLACK)
    if regime is Regime.CRITICAL:
        base = 2.0 * d / (d - 1)
        return (base / lam, base)
    x_star = solve_xstar(params)
    return (x_star / lam, x_star)


def band_units(params: ModelParams) -> str:
    return {Regime.SUBLINEAR: "exponent",
            Regime.CRITICAL: "M*ln(n)/n",
            Regime.LINEAR: "M/n"}[classify(params)]


def estimate_exponent(checkpoints: Sequence[Checkpoint],
                      window: tuple[float, float]) -> ExponentFit:
    """OLS slope of ln M against ln n over the n-window, with stderr."""
    n_min, n_max = window
    pts = [(cp.n, cp.M) for cp in checkpoints if n_min <= cp.n <= n_max]
    if len(pts) < MIN_FIT_POINTS:
        raise AnalysisError(
            f"need at least {MIN_FIT_POINTS} checkpoints in "
            f"[{n_min}, {n_max}], got {len(pts)}")
    ln_n = np.log([p[0] for p in pts])
    ln_m = np.log([p[1] for p in pts])
    fit = stats.linregress(ln_n, ln_m)
    return ExponentFit(slope=float(fit.slope), stderr=float(fit.stderr))


def quantile_nearest_rank(values: Sequence[float], q: float) -> float:
    """Nearest-rank quantile: sorted[ceil(q*N) - 1], exact order statistic."""
    if not 0.0 < q <= 1.0:
        raise AnalysisError(f"quantile level must be in (0, 1], got {q}")
    ordered = sorted(values)
    if not ordered:
        raise AnalysisError("quantile of an empty sequence")
    rank = max(1, math.ceil(q * len(ordered)))
    return float(ordered[rank - 1])


def median(values: Sequence[float]) -> float:
    return quantile_nearest_rank(values, 0.5)


def _normalized_final(cp: Checkpoint, params: ModelParams,
                      regime: Regime) -> float:
    if regime is Regime.SUBLINEAR:
        return cp.M / cp.n ** (params.d / (2.0 + params.beta))
    if regime is Regime.CRITICAL:
        return cp.M * math.log(cp.n) / cp.n
    return cp.Z


def regime_report(params: ModelParams,
                  trajectories: Sequence[Sequence[Checkpoint]],
                  window: tuple[float, float] | None = None) -> RegimeReport:
    """Band-compliance verdicts for an ensemble of recorded trajectories.

    All trajectories must end at the same n. The exponent window defaults
    to the last two decades [n_final/100, n_final]; the fit reported is
    the cross-replica median slope (and median stderr). Verdicts follow
    the per-regime acceptance rules documented on RegimeReport.
    """
    if not trajectories:
        raise AnalysisError("need at least one trajectory")
    finals = {traj[-1].n for traj in trajectories}
    if len(finals) != 1:
        raise AnalysisError(
            f"trajectories disagree on final n: {sorted(finals)}")
    n_final = finals.pop()
    regime = classify(params)
    if window is None:
        window = (n_final / 100.0, float(n_final))

    lo, hi = bands(params)
    final_median = median(
        [_normalized_final(t[-1], params, regime) for t in trajectories])

    fit = None
    try:
        fits = [estimate_exponent(t, window) for t in trajectories]
    except AnalysisError:
        fits = []
    if fits:
        fit = ExponentFit(slope=median([f.slope for f in fits]),
                          stderr=median([f.stderr for f in fits]))

    verdicts: dict[str, bool] = {}
    if regime is Regime.SUBLINEAR:
        if fit is not None:
            verdicts["exponent_in_band"] = lo <= fit.slope <= hi
    elif regime is Regime.CRITICAL:
        w_lo, w_hi = CRITICAL_WIDEN
        verdicts["final_median_in_band"] = w_lo * lo <= final_median <= w_hi * hi
        if fit is not None:
            g_lo, g_hi = CRITICAL_EXPONENT_GATE
            verdicts["exponent_in_band"] = g_lo < fit.slope < g_hi
    else:
        verdicts["final_median_in_band"] = (
            lo - LINEAR_SLACK <= final_median <= hi + LINEAR_SLACK)
        drift = _median_z_drift(trajectories, n_final)
        if drift is not None:
            verdicts["stabilized"] = drift < LINEAR_DRIFT_MAX

    return RegimeReport(regime=regime,
                        x_star=solve_xstar(params),
                        exponent_fit=fit,
                        bands=(lo, hi),
                        band_units=band_units(params),
                        final_median=final_median,
                        n_final=n_final,
                        window=window,
                        verdicts=verdicts)


def _median_z_drift(trajectories, n_final: int) -> float | None:
    """Median over replicas of |Z(final) - Z(ref)|, ref the largest
    recorded checkpoint at or below final/10; None if no such point."""
    drifts = []
    for traj in trajectories:
        refs = [cp for cp in traj if cp.n <= n_final / 10.0]
        if not refs:
            return None
        drifts.append(abs(traj[-1].Z - refs[-1].Z))
    return median(drifts)
