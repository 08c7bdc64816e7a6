"""Rigid alignment, localization errors and sweep statistics."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .errors import InvalidInputError
from .geometry import PointSet

__all__ = [
    "AlignedResult",
    "procrustes_align",
    "localization_error",
    "SweepSummary",
    "sweep_statistics",
    "CLIP_FLOOR",
]

CLIP_FLOOR = 1e-3


@dataclass(frozen=True)
class AlignedResult:
    rotation: np.ndarray
    translation: np.ndarray
    aligned: PointSet
    e_rs: float
    e_r: float
    clipped_rs: bool
    clipped_r: bool


def _orthogonal_fit(src: np.ndarray, dst: np.ndarray):
    """Orthogonal ``Q`` and ``t`` minimizing ``sum |dst_i - (Q src_i + t)|^2``."""
    src_mean = src.mean(axis=1, keepdims=True)
    dst_mean = dst.mean(axis=1, keepdims=True)
    u, _, vt = np.linalg.svd((dst - dst_mean) @ (src - src_mean).T)
    q = u @ vt
    t = dst_mean - q @ src_mean
    return q, t.reshape(-1)


def procrustes_align(estimate: PointSet, truth: PointSet, on: str = "all", clip_floor: float = CLIP_FLOOR) -> AlignedResult:
    """Align ``estimate`` onto ``truth`` with an orthogonal map and translation.

    Reflections are allowed since arrival times cannot distinguish them.
    ``on="receivers"`` fits the transform on receivers only, for data sets
    where only receiver positions are surveyed; the errors are still reported
    for every point with the fitted transform.
    """
    if estimate.coords.shape != truth.coords.shape or estimate.m != truth.m:
        raise InvalidInputError("estimate and truth must have the same shape and split")
    if on == "all":
        cols = slice(None)
    elif on == "receivers":
        cols = slice(0, truth.m)
    else:
        raise InvalidInputError(f"unknown alignment subset {on!r}")
    q, t = _orthogonal_fit(estimate.coords[:, cols], truth.coords[:, cols])
    aligned = estimate.transformed(q, t)
    e_rs, e_r = localization_error(aligned, truth)
    return AlignedResult(q, t, aligned, e_rs, e_r, e_rs < clip_floor, e_r < clip_floor)


def localization_error(aligned: PointSet, truth: PointSet) -> tuple[float, float]:
    """Mean point error over all points (E_rs) and over receivers only (E_r)."""
    err = np.linalg.norm(aligned.coords - truth.coords, axis=0)
    return float(err.mean()), float(err[: truth.m].mean())


@dataclass(frozen=True)
class SweepSummary:
    n: int
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    ci_low: float
    ci_high: float
    ci_degenerate: bool
    outliers: tuple = field(default_factory=tuple)

    def as_dict(self) -> dict:
        out = asdict(self)
        out["outliers"] = list(self.outliers)
        return out


def _median_ci(sorted_values: np.ndarray, level: float = 0.95):
    """Distribution-free CI of the median from binomial order statistics.

    Picks the largest ``j`` such that ``[x_(j), x_(n+1-j)]`` (1-based) covers
    the median with probability ``>= level``.
    """
    n = sorted_values.size
    best = None
    for j in range(1, n // 2 + 1):
        coverage = stats.binom.cdf(n - j, n, 0.5) - stats.binom.cdf(j - 1, n, 0.5)
        if coverage >= level:
            best = j
        else:
            break
    if best is None:
        return float(sorted_values[0]), float(sorted_values[-1]), True
    return float(sorted_values[best - 1]), float(sorted_values[n - best]), False


def sweep_statistics(errors, clip_floor: float = CLIP_FLOOR) -> SweepSummary:
    """Box-plot statistics of per-trial errors after clipping at ``clip_floor``.

    Quartiles use linear interpolation between order statistics.  Whiskers
    reach the most extreme values within 1.5 IQR of the box; anything beyond
    is an outlier.
    """
    values = np.asarray(list(errors), dtype=float).reshape(-1)
    if values.size == 0:
        raise InvalidInputError("sweep_statistics needs at least one error value")
    values = np.sort(np.maximum(values, clip_floor))
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = values[(values >= lo_fence) & (values <= hi_fence)]
    outliers = tuple(float(v) for v in values[(values < lo_fence) | (values > hi_fence)])
    ci_low, ci_high, degenerate = _median_ci(values)
    return SweepSummary(
        n=int(values.size),
        median=float(med),
        q1=float(q1),
        q3=float(q3),
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        ci_low=ci_low,
        ci_high=ci_high,
        ci_degenerate=degenerate or values.size == 1,
        outliers=outliers,
    )
