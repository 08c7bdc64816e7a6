"""Command-line interface: ``localize``, ``simulate``, ``sweep`` and ``dof``.

Exit codes: 0 success, 2 solver failure, 3 input error, 4 config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io as aio
from .conic import CvxpyBackend
from .dof import dof_report
from .errors import ArrayCalibError, ConfigError, InvalidInputError, NoSolutionError, ParseError
from .evaluation import procrustes_align
from .geometry import PointSet
from .pipeline import localize
from .refine import AugLagConfig, LmConfig
from .scenario import ScenarioConfig, generate
from .sweep import SweepConfig, run_sweep, write_sweep_csv, write_trials_csv
from .toa import SyncMode

logger = logging.getLogger("arraycalib")

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_INPUT = 3
EXIT_CONFIG = 4

_MODE_CHOICES = ["none", "receivers-synced", "sources-synced", "one-known"]


def _load_json(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in config {path}: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return data


def _dataclass_from(cls, data, name):
    data = data or {}
    unknown = set(data) - set(cls.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown {name} keys: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name} config: {exc}") from None


def _emit(payload: dict, out_dir, name: str):
    text = json.dumps(payload, indent=1, default=_json_default)
    if out_dir is None:
        print(text)
        return None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj)}")


_RUN_KEYS = {"mode", "dim", "lm", "al", "solver", "known_distances", "distance_bounds", "constant_offset",
             "truth", "seed", "format", "out"}


def cmd_localize(args) -> int:
    config = _load_json(args.config) if args.config else {}
    unknown = set(config) - _RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown run config keys: {sorted(unknown)}")
    mode = SyncMode.parse(args.mode or config.get("mode", "none"))
    d = int(args.dim or config.get("dim", 3))
    lm = _dataclass_from(LmConfig, config.get("lm"), "lm")
    al = _dataclass_from(AugLagConfig, config.get("al"), "al")
    solver = dict(config.get("solver") or {})
    backend = CvxpyBackend(solver.pop("name", "CLARABEL"), float(solver.pop("tol", 1e-8)), **solver)

    toa = aio.read_toa(args.toa, args.format or config.get("format"), speed=args.speed)
    equalities = config.get("known_distances") or []
    if args.known_distances:
        equalities = aio.read_distances(args.known_distances)
    bounds = config.get("distance_bounds") or []
    if args.distance_bounds:
        bounds = aio.read_bounds(args.distance_bounds)
    offsets = config.get("constant_offset")
    if args.constant_offset:
        offsets = aio.read_vector(args.constant_offset)

    tic = time.perf_counter()
    result = localize(toa, d, mode, equalities, bounds, offsets, backend, lm, al)
    total = time.perf_counter() - tic

    payload = {
        "mode": result.mode.value,
        "dim": d,
        "receivers": result.points.receivers,
        "sources": result.points.sources,
        "alpha": result.alpha,
        "sigma": None if result.timing is None else result.timing.sigma,
        "tau": None if result.timing is None else result.timing.tau,
        "timing_residual": None if result.timing is None else result.timing.residual_norm,
        "objective": result.report.loss,
        "sdr": {
            "status": result.sdr_status,
            "objective": result.sdr_objective,
            "tail_mass": result.sdr_tail_mass,
        },
        "refine": result.report.as_dict(),
        "dof": result.dof.as_dict(),
        "dof_feasible": result.dof.feasible,
        "warnings": result.warnings,
        "seconds": dict(result.stage_seconds, total=total),
    }
    if offsets is not None:
        payload["note"] = "known delays removed: sigma includes the common start time and tau is zero"

    truth_path = Path(args.truth) if args.truth else (Path(config["truth"]) if config.get("truth") else None)
    if truth_path is None and (Path(args.toa).parent / "truth.json").exists():
        truth_path = Path(args.toa).parent / "truth.json"
    if truth_path is not None:
        points, receivers, _ = aio.read_truth(truth_path)
        if points is not None:
            aligned = procrustes_align(result.points, points)
            payload["evaluation"] = {"truth": str(truth_path), "e_rs": aligned.e_rs, "e_r": aligned.e_r}
        else:
            padded = PointSet.from_parts(receivers, result.points.sources)
            aligned = procrustes_align(result.points, padded, on="receivers")
            payload["evaluation"] = {"truth": str(truth_path), "e_r": aligned.e_r}

    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _emit(payload, args.out, "results.json")
    return EXIT_OK


def cmd_simulate(args) -> int:
    data = _load_json(args.config) if args.config else {}
    try:
        scenario = ScenarioConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from None
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    inst = generate(scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fmt = args.format or "csv"
    written = aio.write_toa(inst.toa, out / f"toa.{fmt}", fmt)
    aio.write_truth(out / "truth.json", inst.truth, inst.timing)
    (out / "scenario.json").write_text(json.dumps(scenario.to_dict(), indent=1))
    if inst.distance_equalities:
        (out / "distances.json").write_text(json.dumps([list(e) for e in inst.distance_equalities], indent=1))
    print(json.dumps({"written": [str(p) for p in written] + [str(out / "truth.json")]}))
    return EXIT_OK


def cmd_sweep(args) -> int:
    data = _load_json(args.config) if args.config else {}
    try:
        config = SweepConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sweep config: {exc}") from None
    if args.seed is not None:
        config = replace(config, base_seed=args.seed)
    if args.mode:
        config = replace(config, mode=SyncMode.parse(args.mode))
    summary, trials = run_sweep(config, args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(summary, out / "sweep.csv")
    if config.dump_trials:
        write_trials_csv(trials, out / "trials.csv")
    print(json.dumps({"cells": len(summary), "trials": len(trials), "out": str(out)}))
    return EXIT_OK


def cmd_dof(args) -> int:
    report = dof_report(args.m, args.k, args.d, SyncMode.parse(args.mode))
    if args.json:
        print(json.dumps(report.as_dict()))
    else:
        print(report.describe())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arraycalib", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("localize", help="localize receivers and sources from a TOA file")
    p.add_argument("toa")
    p.add_argument("--config")
    p.add_argument("--mode", choices=_MODE_CHOICES)
    p.add_argument("--dim", type=int, choices=[2, 3])
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--speed", type=float, help="propagation speed in m/s (CSV default 343)")
    p.add_argument("--known-distances")
    p.add_argument("--distance-bounds")
    p.add_argument("--constant-offset")
    p.add_argument("--truth", help="ground-truth JSON; defaults to truth.json next to the TOA file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("simulate", help="write a synthetic instance")
    p.add_argument("config", nargs="?")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over size and noise")
    p.add_argument("config", nargs="?")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=_MODE_CHOICES)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("dof", help="degrees of freedom and minimal configurations")
    p.add_argument("m", type=int)
    p.add_argument("k", type=int)
    p.add_argument("d", type=int, nargs="?", default=3)
    p.add_argument("mode", nargs="?", default="none", choices=_MODE_CHOICES)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_dof)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NoSolutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, InvalidInputError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ArrayCalibError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
