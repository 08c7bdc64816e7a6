"""Time-of-arrival measurement model and the timing-invariant loss.

Arrival times follow ``t[m, k] = |r_m - s_k| / v + sigma_m + tau_k``.  Every
matrix of the form ``sigma 1^T + 1 tau^T`` lies in the null space of the
two-sided centering ``A -> J_M A J_K``, so the centered residual between
modelled distances and measured times depends on the geometry only.

Internally all quantities are converted to meters by multiplying times with
the propagation speed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .geometry import PointSet, cross_distances

__all__ = [
    "SyncMode",
    "Timing",
    "ToaMatrix",
    "DEFAULT_SPEED",
    "forward_toa",
    "tdoa_to_toa",
    "timing_invariant_projection",
    "residual_matrix",
    "loss",
    "constant_offset_reduce",
    "missing_indices",
]

DEFAULT_SPEED = 343.0


class SyncMode(str, enum.Enum):
    """Which set of timings is unknown.

    ``NONE``: both receiver offsets and emission times unknown.
    ``RECEIVERS_SYNCED``: receivers share a clock, emission times unknown.
    ``SOURCES_SYNCED``: emission times known (zero), receiver offsets unknown.
    """

    NONE = "none"
    RECEIVERS_SYNCED = "receivers_synced"
    SOURCES_SYNCED = "sources_synced"

    @classmethod
    def parse(cls, value) -> "SyncMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {
            "one_known": cls.SOURCES_SYNCED,
            "one_set_known": cls.SOURCES_SYNCED,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise InvalidParameterError(f"unknown sync mode {value!r}") from None


@dataclass(frozen=True)
class Timing:
    """Receiver offsets ``sigma`` (M,) and emission times ``tau`` (K,), seconds."""

    sigma: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=float).reshape(-1)
        tau = np.array(self.tau, dtype=float).reshape(-1)
        if not (np.all(np.isfinite(sigma)) and np.all(np.isfinite(tau))):
            raise InvalidInputError("timings must be finite")
        sigma.setflags(write=False)
        tau.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "tau", tau)

    @classmethod
    def zeros(cls, m: int, k: int) -> "Timing":
        return cls(np.zeros(m), np.zeros(k))

    def shifted(self, c: float) -> "Timing":
        """The equivalent timing ``(sigma + c, tau - c)``."""
        return Timing(self.sigma + c, self.tau - c)

    def matrix(self) -> np.ndarray:
        return self.sigma[:, None] + self.tau[None, :]


@dataclass(frozen=True)
class ToaMatrix:
    """Measured arrival times in seconds with an observation mask.

    Unobserved entries carry no information; they are stored as NaN.
    """

    t: np.ndarray
    mask: np.ndarray | None = None
    speed: float = DEFAULT_SPEED

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        if t.ndim != 2 or t.size == 0:
            raise InvalidInputError("TOA matrix must be a non-empty 2-D array")
        if self.mask is None:
            mask = np.isfinite(t)
        else:
            mask = np.array(self.mask, dtype=bool)
            if mask.shape != t.shape:
                raise InvalidInputError(f"mask shape {mask.shape} does not match TOA shape {t.shape}")
        if not np.all(np.isfinite(t[mask])):
            bad = np.argwhere(mask & ~np.isfinite(t))[0]
            raise InvalidInputError(f"observed TOA entry ({bad[0]}, {bad[1]}) is not finite")
        if not (self.speed > 0 and np.isfinite(self.speed)):
            raise InvalidParameterError(f"speed must be positive, got {self.speed}")
        empty_rows = np.flatnonzero(~mask.any(axis=1))
        empty_cols = np.flatnonzero(~mask.any(axis=0))
        if empty_rows.size:
            raise InvalidInputError(f"receiver {empty_rows[0]} has no observed entry")
        if empty_cols.size:
            raise InvalidInputError(f"source {empty_cols[0]} has no observed entry")
        t = np.where(mask, t, np.nan)
        t.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "speed", float(self.speed))

    @property
    def shape(self) -> tuple[int, int]:
        return self.t.shape

    @property
    def m(self) -> int:
        return self.t.shape[0]

    @property
    def k(self) -> int:
        return self.t.shape[1]

    @property
    def full(self) -> bool:
        return bool(self.mask.all())

    def missing(self) -> np.ndarray:
        return missing_indices(self.mask)

    def in_meters(self) -> np.ndarray:
        """Speed-scaled times with unobserved entries set to zero."""
        return np.where(self.mask, self.t, 0.0) * self.speed

    def with_values(self, t) -> "ToaMatrix":
        return ToaMatrix(t, self.mask, self.speed)


def missing_indices(mask) -> np.ndarray:
    """``(n_missing, 2)`` array of unobserved ``(m, k)`` pairs in row-major order."""
    return np.argwhere(~np.asarray(mask, dtype=bool))


def forward_toa(x: PointSet, timing: Timing, speed: float = DEFAULT_SPEED) -> ToaMatrix:
    if not speed > 0:
        raise InvalidParameterError(f"speed must be positive, got {speed}")
    if timing.sigma.size != x.m or timing.tau.size != x.k:
        raise InvalidInputError("timing dimensions do not match the point set")
    t = cross_distances(x) / speed + timing.matrix()
    return ToaMatrix(t, np.ones(t.shape, dtype=bool), speed)


def tdoa_to_toa(t: ToaMatrix, reference_row: int = 0) -> ToaMatrix:
    """Difference every row against a reference receiver.

    The result is again a valid TOA matrix whose receiver offsets and emission
    times absorb the reference row.
    """
    if not 0 <= reference_row < t.m:
        raise InvalidInputError(f"reference row {reference_row} out of range")
    if not t.mask[reference_row].all():
        raise InvalidInputError(f"reference row {reference_row} has unobserved entries")
    return ToaMatrix(t.t - t.t[reference_row][None, :], t.mask & t.mask[reference_row][None, :], t.speed)


def _center_rows(a):
    return a - a.mean(axis=0, keepdims=True)


def _center_cols(a):
    return a - a.mean(axis=1, keepdims=True)


def timing_invariant_projection(a, mode: SyncMode | str = SyncMode.NONE) -> np.ndarray:
    """Apply the centering that annihilates the unknown timings.

    ``none`` gives ``J_M A J_K``, ``receivers_synced`` gives ``J_M A`` and
    ``sources_synced`` gives ``A J_K``.  Works on a trailing stack too:
    ``a`` may be ``(M, K, ...)``.
    """
    mode = SyncMode.parse(mode)
    a = np.asarray(a, dtype=float)
    if mode is SyncMode.NONE:
        a = a - a.mean(axis=0, keepdims=True)
        return a - a.mean(axis=1, keepdims=True)
    if mode is SyncMode.RECEIVERS_SYNCED:
        return a - a.mean(axis=0, keepdims=True)
    return a - a.mean(axis=1, keepdims=True)


def _scatter_alpha(shape, mask, alpha) -> np.ndarray:
    idx = missing_indices(mask)
    alpha = np.asarray(alpha if alpha is not None else np.zeros(len(idx)), dtype=float).reshape(-1)
    if alpha.size != len(idx):
        raise InvalidInputError(f"expected {len(idx)} missing-entry coefficients, got {alpha.size}")
    out = np.zeros(shape)
    if len(idx):
        out[idx[:, 0], idx[:, 1]] = alpha
    return out


def residual_matrix(delta, t: ToaMatrix, mode=SyncMode.NONE, alpha=None) -> np.ndarray:
    """Centered residual ``P(delta - T + sum alpha e_m e_k^T)`` in meters."""
    delta = np.asarray(delta, dtype=float)
    if delta.shape != t.shape:
        raise InvalidInputError(f"distance matrix shape {delta.shape} does not match TOA shape {t.shape}")
    inner = delta - t.in_meters() + _scatter_alpha(t.shape, t.mask, alpha)
    return timing_invariant_projection(inner, mode)


def loss(x: PointSet, t: ToaMatrix, mode=SyncMode.NONE, alpha=None) -> float:
    """Timing-invariant loss ``0.5 * ||P(delta(x) - T + alpha-scatter)||_F^2`` (m^2)."""
    if x.m != t.m or x.k != t.k:
        raise InvalidInputError(f"point set ({x.m}, {x.k}) does not match TOA shape {t.shape}")
    r = residual_matrix(cross_distances(x), t, mode, alpha)
    return 0.5 * float(np.sum(r * r))


def constant_offset_reduce(t: ToaMatrix, known_delays) -> ToaMatrix:
    """Remove known per-source emission delays ``delta_k`` (seconds).

    With ``tau_k = tau_0 + delta_k`` the reduced matrix only carries receiver
    offsets (the common ``tau_0`` folds into them), so it should be solved
    with ``SyncMode.SOURCES_SYNCED``.
    """
    delays = np.asarray(known_delays, dtype=float).reshape(-1)
    if delays.size != t.k:
        raise InvalidInputError(f"expected {t.k} delays, got {delays.size}")
    if not np.all(np.isfinite(delays)):
        raise InvalidInputError("delays must be finite")
    return ToaMatrix(t.t - delays[None, :], t.mask, t.speed)
