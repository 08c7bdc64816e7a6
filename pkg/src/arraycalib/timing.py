"""Least-squares recovery of receiver offsets and emission times.

Once distances are known, ``T - delta / v = sigma 1^T + 1 tau^T`` is linear
in the timings.  The system has a one-dimensional null space (a global time
shift), removed here by pinning ``sigma_0 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, UnderdeterminedError
from .toa import SyncMode, ToaMatrix

__all__ = ["TimingEstimate", "recover_timing"]


@dataclass(frozen=True)
class TimingEstimate:
    """Recovered timings in seconds.

    In modes ``none`` and ``receivers_synced`` the first receiver offset is
    exactly zero.  In ``sources_synced`` the emission times are known to be
    zero and every receiver offset is estimated.
    """

    sigma: np.ndarray
    tau: np.ndarray
    residual_norm: float


def _system(mask: np.ndarray, mode: SyncMode):
    """Design matrix over observed entries (row-major) and its column split."""
    m, k = mask.shape
    rows, cols = np.nonzero(mask)
    n_obs = rows.size
    sigma_cols = np.arange(1, m) if mode is not SyncMode.SOURCES_SYNCED else np.arange(m)
    if mode is SyncMode.RECEIVERS_SYNCED:
        sigma_cols = np.arange(0)
    n_sigma = sigma_cols.size
    n_tau = 0 if mode is SyncMode.SOURCES_SYNCED else k
    a = np.zeros((n_obs, n_sigma + n_tau))
    sigma_pos = np.full(m, -1)
    sigma_pos[sigma_cols] = np.arange(n_sigma)
    has_sigma = sigma_pos[rows] >= 0
    a[np.flatnonzero(has_sigma), sigma_pos[rows[has_sigma]]] = 1.0
    if n_tau:
        a[np.arange(n_obs), n_sigma + cols] = 1.0
    return a, rows, cols, sigma_cols, n_sigma, n_tau


def recover_timing(delta_hat, t: ToaMatrix, mode=SyncMode.NONE) -> TimingEstimate:
    """Fit timings to ``T - delta_hat / speed`` over the observed entries.

    Parameters
    ----------
    delta_hat : (M, K) array
        Estimated receiver-source distances in meters.
    t : ToaMatrix
        Measured arrival times.
    mode : SyncMode
        ``none`` fits ``M - 1`` offsets and ``K`` emission times,
        ``receivers_synced`` fits emission times only, ``sources_synced``
        fits receiver offsets only.

    Raises
    ------
    UnderdeterminedError
        When the observed entries do not pin down every unknown (too few
        entries or a disconnected receiver/source observation graph).
    """
    mode = SyncMode.parse(mode)
    delta_hat = np.asarray(delta_hat, dtype=float)
    if delta_hat.shape != t.shape:
        raise InvalidInputError(f"distance shape {delta_hat.shape} does not match TOA shape {t.shape}")
    a, rows, cols, sigma_cols, n_sigma, n_tau = _system(t.mask, mode)
    n_unknown = n_sigma + n_tau
    if rows.size < n_unknown:
        raise UnderdeterminedError(f"{rows.size} observed entries for {n_unknown} unknown timings")
    if np.linalg.matrix_rank(a) < n_unknown:
        raise UnderdeterminedError("observed entries leave the timings underdetermined")
    e = (t.t - delta_hat / t.speed)[rows, cols]
    sol, *_ = np.linalg.lstsq(a, e, rcond=None)
    sigma = np.zeros(t.m)
    sigma[sigma_cols] = sol[:n_sigma]
    tau = np.zeros(t.k)
    if n_tau:
        tau[:] = sol[n_sigma:]
    res = float(np.linalg.norm(a @ sol - e))
    return TimingEstimate(sigma, tau, res)
