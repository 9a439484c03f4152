"""Command-line interface.

Subcommands: run (single trajectory to JSONL), ensemble (replicated runs
to an output directory), solve-xstar (print the linear-regime root), and
analyze (recompute the regime report from a stored directory). A JSON
config file can supply any value; explicit flags override it. Exit codes:
0 success, 2 invalid arguments, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .analysis import AnalysisError, solve_xstar
from .ensemble import EnsembleError, EnsembleSpec, replica_trajectory, run_ensemble
from .io import (FORMATS, FormatError, analyze_dir, report_json,
                 serialize_checkpoint, write_ensemble_dir, write_trajectory)
from .model import (CheckpointSchedule, ConsistencyError, ModelParams,
                    ParamError, SinkError)
from .sampler import SamplerError

_USAGE_ERRORS = (ParamError, AnalysisError, SamplerError)
_RUNTIME_ERRORS = (EnsembleError, SinkError, ConsistencyError, FormatError,
                   OSError)


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--d", type=int, default=None,
                        help="sample size per step, integer >= 2")
    parser.add_argument("--beta", type=float, default=None,
                        help="weight offset, must exceed -1 (default 0)")
    parser.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="High fitness value, at least 1 (default 2)")
    parser.add_argument("--p-lambda", dest="p_lambda", type=float,
                        default=None,
                        help="probability a new vertex is High, in (0,1) "
                             "(default 0.5)")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--steps", type=int, default=None,
                        help="target edge count to grow to")
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed (default 0)")
    parser.add_argument("--schedule-ratio", dest="schedule_ratio",
                        type=float, default=None,
                        help="geometric checkpoint ratio (default 1.2)")
    parser.add_argument("--config", default=None,
                        help="JSON config file; flags override its values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fitchoice",
        description="Preferential-attachment tree growth with "
                    "fitness-based choice: simulation and analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser(
        "run", help="grow one trajectory and emit JSONL checkpoints")
    _add_param_flags(p_run)
    _add_run_flags(p_run)
    p_run.add_argument("--out", default=None,
                       help="output JSONL path (default stdout)")
    p_run.set_defaults(func=cmd_run)

    p_ens = sub.add_parser(
        "ensemble",
        help="run seeded replicas, write stats and report to a directory")
    _add_param_flags(p_ens)
    _add_run_flags(p_ens)
    p_ens.add_argument("--replicas", type=int, default=None,
                       help="replica count (default 1)")
    p_ens.add_argument("--parallelism", type=int, default=None,
                       help="worker threads (default $FITCHOICE_THREADS or 1)")
    p_ens.add_argument("--format", dest="formats", default=None,
                       help="comma-separated subset of jsonl,csv "
                            "(default both)")
    p_ens.add_argument("--out", default=None, required=False,
                       help="output directory (required)")
    p_ens.set_defaults(func=cmd_ensemble)

    p_x = sub.add_parser(
        "solve-xstar",
        help="print the linear-regime growth rate root x* to 12 decimals")
    _add_param_flags(p_x)
    p_x.set_defaults(func=cmd_solve_xstar)

    p_an = sub.add_parser(
        "analyze",
        help="recompute the regime report from an ensemble directory")
    p_an.add_argument("dir", help="ensemble output directory to read")
    p_an.set_defaults(func=cmd_analyze)

    return parser


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ParamError("config file must hold a JSON object")
    return obj


def _pick(flag_value, config: dict, key: str, default):
    if flag_value is not None:
        return flag_value
    return config.get(key, default)


def _resolve_params(args, config: dict) -> ModelParams:
    section = config.get("params", {})
    d = _pick(args.d, section, "d", None)
    if d is None:
        raise ParamError("d is required: pass --d or config params.d")
    return ModelParams(
        d=int(d),
        beta=float(_pick(args.beta, section, "beta", 0.0)),
        lam=float(_pick(args.lam, section, "lambda", 2.0)),
        p_lambda=float(_pick(args.p_lambda, section, "p_lambda", 0.5)))


def _resolve_schedule(args, config: dict) -> CheckpointSchedule:
    section = config.get("schedule", {})
    ratio = float(_pick(args.schedule_ratio, section, "ratio", 1.2))
    extra = tuple(int(e) for e in section.get("extra", ()))
    return CheckpointSchedule(ratio=ratio, extra=extra)


def _resolve_steps(args, config: dict) -> int:
    steps = _pick(args.steps, config, "target_edges", None)
    if steps is None:
        raise ParamError(
            "steps is required: pass --steps or config target_edges")
    return int(steps)


def _default_parallelism() -> int:
    raw = os.environ.get("FITCHOICE_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return int(raw)
    except ValueError:
        raise ParamError(
            f"FITCHOICE_THREADS must be an integer, got {raw!r}") from None


def cmd_run(args) -> int:
    config = _load_config(args.config)
    spec = EnsembleSpec(
        params=_resolve_params(args, config),
        replicas=1,
        target_edges=_resolve_steps(args, config),
        master_seed=int(_pick(args.seed, config, "master_seed", 0)),
        schedule=_resolve_schedule(args, config))
    trajectory = replica_trajectory(spec, 0)
    if args.out is not None:
        write_trajectory(args.out, trajectory)
    else:
        for cp in trajectory:
            sys.stdout.write(serialize_checkpoint(cp) + "\n")
    return 0


def cmd_ensemble(args) -> int:
    config = _load_config(args.config)
    if args.out is None:
        raise ParamError("an output directory is required: pass --out")
    if args.formats is not None:
        formats = tuple(f.strip() for f in args.formats.split(",") if f.strip())
    else:
        formats = tuple(config.get("formats", FORMATS))
    parallelism = (args.parallelism if args.parallelism is not None
                   else _default_parallelism())
    spec = EnsembleSpec(
        params=_resolve_params(args, config),
        replicas=int(_pick(args.replicas, config, "replicas", 1)),
        target_edges=_resolve_steps(args, config),
        master_seed=int(_pick(args.seed, config, "master_seed", 0)),
        schedule=_resolve_schedule(args, config),
        parallelism=parallelism)
    result = run_ensemble(spec)
    write_ensemble_dir(result, args.out, formats)
    return 0


def cmd_solve_xstar(args) -> int:
    if args.d is None:
        raise ParamError("d is required: pass --d")
    params = ModelParams(
        d=int(args.d),
        beta=float(args.beta) if args.beta is not None else 0.0,
        lam=float(args.lam) if args.lam is not None else 2.0,
        p_lambda=float(args.p_lambda) if args.p_lambda is not None else 0.5)
    x_star = solve_xstar(params)
    if x_star is None:
        print("none: d <= 2+beta")
    else:
        print(f"{x_star:.12f}")
    return 0


def cmd_analyze(args) -> int:
    report = analyze_dir(args.dir)
    sys.stdout.write(report_json(report))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _RUNTIME_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
