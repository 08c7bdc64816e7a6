"""Degrees-of-freedom bookkeeping and minimal configurations.

Counts are kept in integers by working with twice the number of degrees of
freedom, since the rigid-motion gauge contributes ``d (d + 1) / 2``.

A configuration is *feasible* when the number of measurements ``M K`` is at
least the number of unknowns, i.e. the solution set is generically of
dimension zero.  That does not imply a unique solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParameterError
from .toa import SyncMode

__all__ = ["DofReport", "degrees_of_freedom", "min_sources", "dof_report"]


def _check(m, k, d):
    if m < 1 or k < 1:
        raise InvalidParameterError("need at least one receiver and one source")
    if d not in (2, 3):
        raise InvalidParameterError(f"dimension must be 2 or 3, got {d}")


def _twice_dof_coefficients(m: int, d: int, mode: SyncMode) -> tuple[int, int]:
    """``2 * dof = a * K + b`` for fixed ``M``."""
    gauge2 = d * (d + 1)
    if mode is SyncMode.NONE:
        # (d + 1)(M + K) - d (d + 1) / 2 - 1
        return 2 * (d + 1), 2 * (d + 1) * m - gauge2 - 2
    if mode is SyncMode.SOURCES_SYNCED:
        # receiver offsets unknown: d (M + K) - d (d + 1) / 2 + M
        return 2 * d, 2 * d * m - gauge2 + 2 * m
    # emission times unknown: d (M + K) - d (d + 1) / 2 + K
    return 2 * (d + 1), 2 * d * m - gauge2


def degrees_of_freedom(m: int, k: int, d: int = 3, mode=SyncMode.NONE) -> int:
    """Number of unknowns left after removing the rigid-motion and time gauges."""
    mode = SyncMode.parse(mode)
    _check(m, k, d)
    a, b = _twice_dof_coefficients(m, d, mode)
    twice = a * k + b
    return twice // 2


def min_sources(m: int, d: int = 3, mode=SyncMode.NONE) -> int | None:
    """Smallest ``K`` with ``M K >= dof``; ``None`` when no ``K`` suffices."""
    mode = SyncMode.parse(mode)
    _check(m, 1, d)
    a, b = _twice_dof_coefficients(m, d, mode)
    # need 2 M K >= a K + b
    slope = 2 * m - a
    if slope <= 0:
        return None if a + b > 2 * m else 1
    return max(1, math.ceil(b / slope))


@dataclass(frozen=True)
class DofReport:
    m: int
    k: int
    d: int
    mode: SyncMode
    measurements: int
    dof: int
    feasible: bool
    min_sources: int | None

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "k": self.k,
            "d": self.d,
            "mode": self.mode.value,
            "measurements": self.measurements,
            "dof": self.dof,
            "feasible": self.feasible,
            "min_sources": self.min_sources,
        }

    def describe(self) -> str:
        head = f"M={self.m} K={self.k} d={self.d} mode={self.mode.value}: {self.measurements} measurements, {self.dof} degrees of freedom"
        if self.feasible:
            verdict = "feasible (dimension-zero solution set; uniqueness not implied)"
        else:
            verdict = "infeasible (more unknowns than measurements)"
        if self.min_sources is None:
            tail = f"no number of sources suffices for M={self.m}"
        else:
            tail = f"minimum sources for M={self.m}: {self.min_sources}"
        return f"{head}\n{verdict}\n{tail}"


def dof_report(m: int, k: int, d: int = 3, mode=SyncMode.NONE) -> DofReport:
    mode = SyncMode.parse(mode)
    dof = degrees_of_freedom(m, k, d, mode)
    return DofReport(m, k, d, mode, m * k, dof, m * k >= dof, min_sources(m, d, mode))
