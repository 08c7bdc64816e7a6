"""Monte Carlo sweeps over array size and noise level.

Every trial is an isolated pipeline run on a freshly generated instance.
Trial ``i`` of every grid cell uses seed ``base_seed + i`` so that cells
differing only in noise share geometry and timings.  Results are keyed by
(cell, trial) and sorted before aggregation, so serial and parallel runs
give identical tables.
"""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ArrayCalibError, ConfigError
from .evaluation import CLIP_FLOOR, procrustes_align, sweep_statistics
from .pipeline import localize
from .scenario import ScenarioConfig, generate
from .toa import SyncMode

logger = logging.getLogger(__name__)

__all__ = ["SweepConfig", "run_trial", "run_sweep", "write_sweep_csv", "write_trials_csv", "resolve_workers"]

SUMMARY_COLUMNS = [
    "m", "k", "noise_sigma", "n", "n_failed", "median", "q1", "q3",
    "whisker_low", "whisker_high", "ci_low", "ci_high", "ci_degenerate", "n_outliers",
]
TRIAL_COLUMNS = ["m", "k", "noise_sigma", "trial", "seed", "status", "e_rs", "e_r", "loss", "iterations"]


@dataclass(frozen=True)
class SweepConfig:
    sizes: tuple = (7, 8, 9, 10, 11, 12)
    noise: tuple = (0.0, 1e-6, 1e-5, 1e-4, 1e-3)
    trials: int = 20
    base_seed: int = 0
    mode: SyncMode = SyncMode.NONE
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    clip_floor: float = CLIP_FLOOR
    dump_trials: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.sizes or not self.noise:
            raise ConfigError("sizes and noise must be non-empty")
        object.__setattr__(self, "mode", SyncMode.parse(self.mode))

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
        sizes = []
        for s in data.pop("sizes", cls.sizes):
            sizes.append(tuple(int(v) for v in s) if isinstance(s, (list, tuple)) else int(s))
        scenario = ScenarioConfig.from_dict(data.pop("scenario", {}) or {})
        noise = tuple(float(v) for v in data.pop("noise", cls.noise))
        return cls(sizes=tuple(sizes), noise=noise, scenario=scenario, **data)

    def cells(self) -> list[tuple[int, int, float]]:
        out = []
        for size in self.sizes:
            m, k = size if isinstance(size, tuple) else (size, size)
            for sigma in self.noise:
                out.append((m, k, float(sigma)))
        return out


def resolve_workers(requested: int | None = None) -> int:
    """Worker count; the ``ARRAYCALIB_WORKERS`` environment variable wins."""
    env = os.environ.get("ARRAYCALIB_WORKERS")
    if env:
        try:
            requested = int(env)
        except ValueError:
            raise ConfigError(f"ARRAYCALIB_WORKERS must be an integer, got {env!r}") from None
    return max(1, int(requested or 1))


def run_trial(job) -> dict:
    """Run one (cell, trial) job; never raises for pipeline failures."""
    scenario, mode, trial, clip_floor = job
    row = {
        "m": scenario.m,
        "k": scenario.k,
        "noise_sigma": scenario.noise_sigma,
        "trial": trial,
        "seed": scenario.seed,
    }
    try:
        inst = generate(scenario)
        result = localize(inst.toa, scenario.d, mode, inst.distance_equalities)
        aligned = procrustes_align(result.points, inst.truth, clip_floor=clip_floor)
        row.update(status="ok", e_rs=aligned.e_rs, e_r=aligned.e_r, loss=result.report.loss,
                   iterations=result.report.iterations)
    except ArrayCalibError as exc:
        logger.warning("trial %s failed: %s", trial, exc)
        row.update(status=type(exc).__name__, e_rs=float("nan"), e_r=float("nan"), loss=float("nan"), iterations=0)
    return row


def _jobs(config: SweepConfig):
    for m, k, sigma in config.cells():
        for trial in range(config.trials):
            scenario = replace(config.scenario, m=m, k=k, noise_sigma=sigma, seed=config.base_seed + trial,
                               sync=config.mode)
            yield scenario, config.mode, trial, config.clip_floor


def run_sweep(config: SweepConfig, workers: int | None = None) -> tuple[list[dict], list[dict]]:
    """Run every trial; returns ``(summary_rows, trial_rows)``."""
    workers = resolve_workers(workers)
    jobs = list(_jobs(config))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(run_trial, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        trials = [run_trial(job) for job in jobs]
    trials.sort(key=lambda r: (r["m"], r["k"], r["noise_sigma"], r["trial"]))

    summary = []
    for m, k, sigma in config.cells():
        cell = [r for r in trials if (r["m"], r["k"], r["noise_sigma"]) == (m, k, sigma)]
        errors = [r["e_rs"] for r in cell if np.isfinite(r["e_rs"])]
        row = {"m": m, "k": k, "noise_sigma": sigma, "n": len(errors), "n_failed": len(cell) - len(errors)}
        if errors:
            stats = sweep_statistics(errors, config.clip_floor)
            row.update(median=stats.median, q1=stats.q1, q3=stats.q3, whisker_low=stats.whisker_low,
                       whisker_high=stats.whisker_high, ci_low=stats.ci_low, ci_high=stats.ci_high,
                       ci_degenerate=int(stats.ci_degenerate), n_outliers=len(stats.outliers))
        else:
            row.update({c: float("nan") for c in SUMMARY_COLUMNS[5:]})
        summary.append(row)
    return summary, trials


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write(rows, columns, path):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])
    return path


def write_sweep_csv(rows, path) -> Path:
    return _write(rows, SUMMARY_COLUMNS, path)


def write_trials_csv(rows, path) -> Path:
    return _write(rows, TRIAL_COLUMNS, path)
