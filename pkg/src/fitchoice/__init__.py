"""Preferential-attachment tree growth with fitness-based choice.

Simulates a growing random tree where each new vertex samples d existing
vertices with probability proportional to degree+beta and attaches to the
one maximizing fitness*degree, then provides the analysis tooling to test
the three max-degree growth regimes (sublinear, critical n/ln n, linear)
against recorded trajectories.
"""

from .analysis import (AnalysisError, ExponentFit, Regime, RegimeReport,
                       band_units, bands, classify, estimate_exponent,
                       eval_f, eval_g, g_expansion_check, median,
                       quantile_nearest_rank, regime_report, solve_xstar)
from .ensemble import (AGGREGATES, QUANTITIES, EnsembleError, EnsembleResult,
                       EnsembleSpec, aggregate, hub_stabilization_step,
                       replica_trajectory, run_ensemble)
from .io import (FormatError, RunConfig, analyze_dir, config_from_dict,
                 config_to_dict, parse_checkpoint, read_ensemble_dir,
                 read_trajectory, report_json, report_to_dict,
                 serialize_checkpoint, write_ensemble_dir, write_stats_csv,
                 write_trajectory)
from .model import (CheckpointSchedule, ConsistencyError, FitnessClass,
                    ModelParams, ParamError, SinkError, StepRecord,
                    TreeState, evolve_step, fitness_value, init_state, run,
                    select_argmax)
from .observables import (Checkpoint, DiagnosticSeries, DriftStats,
                          diagnostics, exclusivity_check, scan_class_maxima,
                          snapshot, tail_weight, u_drift, verify_against_scan)
from .sampler import (SamplerError, WeightedIndex, append_vertex,
                      build_index, increment_degree, oracle_sample,
                      sample_vertex)
from ._rng import RngState, derive_replica_seed

__version__ = "0.1.0"

__all__ = [
    "AGGREGATES", "QUANTITIES",
    "AnalysisError", "Checkpoint", "CheckpointSchedule", "ConsistencyError",
    "DiagnosticSeries", "DriftStats", "EnsembleError", "EnsembleResult",
    "EnsembleSpec", "ExponentFit", "FitnessClass", "FormatError",
    "ModelParams", "ParamError", "Regime", "RegimeReport", "RngState",
    "RunConfig", "SamplerError", "SinkError", "StepRecord", "TreeState",
    "WeightedIndex", "aggregate", "analyze_dir", "append_vertex",
    "band_units", "bands", "build_index", "classify", "config_from_dict",
    "config_to_dict", "derive_replica_seed", "diagnostics",
    "estimate_exponent", "eval_f", "eval_g", "evolve_step",
    "exclusivity_check", "fitness_value", "g_expansion_check",
    "hub_stabilization_step", "init_state", "median", "oracle_sample",
    "parse_checkpoint", "quantile_nearest_rank", "read_ensemble_dir",
    "read_trajectory", "regime_report", "replica_trajectory", "report_json",
    "report_to_dict", "run", "run_ensemble", "sample_vertex",
    "scan_class_maxima", "select_argmax", "serialize_checkpoint", "snapshot",
    "solve_xstar", "tail_weight", "u_drift", "verify_against_scan",
    "write_ensemble_dir", "write_stats_csv", "write_trajectory",
]
