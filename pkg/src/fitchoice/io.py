"""Serialization: JSONL trajectories, CSV statistics, JSON config/reports.

Every writer is byte-deterministic: fixed key order, "\\n" line endings,
reals at 17 significant digits (enough for exact float64 round-trips).
An ensemble output directory therefore reproduces byte-for-byte from the
same config, independent of parallelism; config.json deliberately omits
execution knobs (parallelism, output paths) so data artifacts never
depend on where or how the run executed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .analysis import RegimeReport, regime_report
from .ensemble import AGGREGATES, QUANTITIES, EnsembleResult, EnsembleSpec
from .model import CheckpointSchedule, ModelParams, ParamError
from .observables import Checkpoint

CHECKPOINT_KEYS = ("n", "M", "M1", "Mlambda", "X", "Z", "hub_low",
                   "hub_high", "L1_at_max", "Llambda_at_max")
FORMATS = ("jsonl", "csv")

CONFIG_NAME = "config.json"
REPORT_NAME = "report.json"
STATS_NAME = "stats.csv"


class FormatError(ValueError):
    """An input file does not match the documented layout."""


def _g17(x: float) -> str:
    return "%.17g" % x


# ------------------------------------------------------------ checkpoints

def serialize_checkpoint(cp: Checkpoint) -> str:
    """One JSON object, fixed key order, reals at 17 significant digits."""
    return ('{"n":%d,"M":%d,"M1":%d,"Mlambda":%d,"X":%s,"Z":%s,'
            '"hub_low":%d,"hub_high":%d,"L1_at_max":%d,"Llambda_at_max":%d}'
            % (cp.n, cp.M, cp.M1, cp.Mlambda, _g17(cp.X), _g17(cp.Z),
               cp.hub_low, cp.hub_high, cp.L1_at_max, cp.Llambda_at_max))


def parse_checkpoint(line: str) -> Checkpoint:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid checkpoint record: {exc}") from exc
    if tuple(obj) != CHECKPOINT_KEYS:
        raise FormatError(
            f"checkpoint keys {tuple(obj)} != expected {CHECKPOINT_KEYS}")
    return Checkpoint(
        n=int(obj["n"]), M=int(obj["M"]), M1=int(obj["M1"]),
        Mlambda=int(obj["Mlambda"]), X=float(obj["X"]), Z=float(obj["Z"]),
        hub_low=int(obj["hub_low"]), hub_high=int(obj["hub_high"]),
        L1_at_max=int(obj["L1_at_max"]),
        Llambda_at_max=int(obj["Llambda_at_max"]))


def write_trajectory(path, checkpoints: Iterable[Checkpoint]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for cp in checkpoints:
            fh.write(serialize_checkpoint(cp) + "\n")


def read_trajectory(path) -> tuple[Checkpoint, ...]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(parse_checkpoint(line))
    return tuple(out)


# ------------------------------------------------------------ config

def params_to_dict(params: ModelParams) -> dict:
    return {"d": params.d, "beta": params.beta, "lambda": params.lam,
            "p_lambda": params.p_lambda}


def params_from_dict(obj: dict) -> ModelParams:
    try:
        return ModelParams(d=int(obj["d"]), beta=float(obj["beta"]),
                           lam=float(obj["lambda"]),
                           p_lambda=float(obj["p_lambda"]))
    except KeyError as exc:
        raise ParamError(f"config missing parameter key {exc}") from exc


def schedule_to_dict(schedule: CheckpointSchedule) -> dict:
    return {"ratio": schedule.ratio, "extra": list(schedule.extra)}


def schedule_from_dict(obj: dict) -> CheckpointSchedule:
    return CheckpointSchedule(ratio=float(obj.get("ratio", 1.2)),
                              extra=tuple(int(e) for e in obj.get("extra", ())))


@dataclass(frozen=True)
class RunConfig:
    """EnsembleSpec plus output destination and formats.

    The JSON form carries the spec and formats; out_dir and parallelism
    are execution knobs resolved at invocation time and never serialized,
    keeping output directories byte-identical across hosts and thread
    counts.
    """

    spec: EnsembleSpec
    out_dir: str | None = None
    formats: tuple[str, ...] = FORMATS

    def __post_init__(self):
        if not self.formats:
            raise ParamError("formats must name at least one of jsonl, csv")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ParamError(
                f"formats must be a subset of {set(FORMATS)}, got {bad}")


def config_to_dict(config: RunConfig) -> dict:
    spec = config.spec
    return {
        "params": params_to_dict(spec.params),
        "replicas": spec.replicas,
        "target_edges": spec.target_edges,
        "master_seed": spec.master_seed,
        "schedule": schedule_to_dict(spec.schedule),
        "formats": list(config.formats),
    }


def config_from_dict(obj: dict, out_dir: str | None = None,
                     parallelism: int = 1) -> RunConfig:
    try:
        spec = EnsembleSpec(
            params=params_from_dict(obj["params"]),
            replicas=int(obj.get("replicas", 1)),
            target_edges=int(obj["target_edges"]),
            master_seed=int(obj.get("master_seed", 0)),
            schedule=schedule_from_dict(obj.get("schedule", {})),
            parallelism=parallelism)
    except KeyError as exc:
        raise ParamError(f"config missing key {exc}") from exc
    return RunConfig(spec=spec, out_dir=out_dir,
                     formats=tuple(obj.get("formats", FORMATS)))


def _dump_json(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


# ------------------------------------------------------------ reports

def report_to_dict(report: RegimeReport) -> dict:
    fit = report.exponent_fit
    return {
        "regime": report.regime.value,
        "x_star": report.x_star,
        "exponent_fit": None if fit is None else {"slope": fit.slope,
                                                  "stderr": fit.stderr},
        "bands": list(report.bands),
        "band_units": report.band_units,
        "final_median": report.final_median,
        "n_final": report.n_final,
        "window": list(report.window),
        "verdicts": dict(report.verdicts),
        "passed": report.passed,
    }


def report_json(report: RegimeReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


# ------------------------------------------------------------ statistics CSV

def stats_csv_lines(result: EnsembleResult) -> Iterable[str]:
    """Long-format rows: n, stat_name, value (stable order, 17-digit reals)."""
    yield "n,stat_name,value"
    for j, n in enumerate(result.checkpoint_ns):
        for quantity in QUANTITIES:
            for agg in AGGREGATES:
                name = f"{quantity}_{agg}"
                yield f"{n},{name},{_g17(result.stats[name][j])}"


def write_stats_csv(path, result: EnsembleResult) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in stats_csv_lines(result):
            fh.write(line + "\n")


# ------------------------------------------------------------ ensemble dirs

def _replica_name(i: int) -> str:
    return f"replica_{i:03d}.jsonl"


def write_ensemble_dir(result: EnsembleResult, out_dir,
                       formats: Sequence[str] = FORMATS) -> Path:
    """Write config, per-replica trajectories, statistics, and report.

    jsonl format controls the per-replica trajectory files (which analyze
    needs); csv controls the cross-replica statistics table. config.json
    and report.json are always written.
    """
    config = RunConfig(spec=result.spec, out_dir=str(out_dir),
                       formats=tuple(formats))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(config_to_dict(config), out / CONFIG_NAME)
    if "jsonl" in config.formats:
        for i, trajectory in enumerate(result.trajectories):
            write_trajectory(out / _replica_name(i), trajectory)
    if "csv" in config.formats:
        write_stats_csv(out / STATS_NAME, result)
    with open(out / REPORT_NAME, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report_json(result.report))
    return out


def read_ensemble_dir(out_dir):
    """Load (RunConfig, trajectories) back from an output directory."""
    out = Path(out_dir)
    config_path = out / CONFIG_NAME
    if not config_path.is_file():
        raise FormatError(f"no {CONFIG_NAME} in {out}")
    with open(config_path, encoding="utf-8") as fh:
        config = config_from_dict(json.load(fh), out_dir=str(out))
    trajectories = []
    for i in range(config.spec.replicas):
        path = out / _replica_name(i)
        if not path.is_file():
            raise FormatError(
                f"missing {path.name}: directory holds fewer trajectories "
                f"than the configured {config.spec.replicas} replicas")
        trajectories.append(read_trajectory(path))
    return config, tuple(trajectories)


def analyze_dir(out_dir) -> RegimeReport:
    """Recompute the regime report from stored trajectories, no simulation."""
    config, trajectories = read_ensemble_dir(out_dir)
    return regime_report(config.spec.params, trajectories)
