"""Levenberg-Marquardt refinement of positions on the timing-invariant loss.

The parameter vector is ``theta = [vec(R); vec(S); alpha]`` where ``vec``
stacks the points one after another (``x_0[0..d-1], x_1[0..d-1], ...``) and
``alpha`` holds one coefficient per unobserved TOA entry in row-major order.
The dimension is inferred from the length of ``theta``.

Known inter-point distances are enforced with an augmented-Lagrangian outer
loop whose inner problem is again solved by LM on the stacked residual
``[f; sqrt(mu) (g + z / (2 mu))]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, NonFiniteLossError
from .geometry import PointSet
from .toa import SyncMode, ToaMatrix, missing_indices, timing_invariant_projection

logger = logging.getLogger(__name__)

__all__ = [
    "LmConfig",
    "AugLagConfig",
    "RefineReport",
    "pack",
    "unpack",
    "residual",
    "jacobian",
    "constraint_residual",
    "constraint_jacobian",
    "lm_minimize",
    "lm_minimize_constrained",
]


@dataclass(frozen=True)
class LmConfig:
    max_iterations: int = 1000
    initial_damping: float = 1e-2
    damping_increase: float = 10.0
    damping_decrease: float = 10.0
    gradient_tolerance: float = 1e-10
    relative_loss_tolerance: float = 1e-12
    distance_floor: float = 1e-9
    max_damping: float = 1e16

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be >= 1")
        for name in ("initial_damping", "damping_increase", "damping_decrease", "gradient_tolerance",
                     "relative_loss_tolerance", "distance_floor", "max_damping"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")


@dataclass(frozen=True)
class AugLagConfig:
    penalty: float = 1.0
    penalty_growth: float = 2.0
    max_penalty: float = 1e6
    outer_iterations: int = 30
    constraint_tolerance: float = 1e-8

    def __post_init__(self):
        if not self.penalty > 0:
            raise InvalidInputError("penalty must be positive")
        if self.outer_iterations < 1:
            raise InvalidInputError("outer_iterations must be >= 1")


@dataclass
class RefineReport:
    iterations: int = 0
    loss: float = float("nan")
    gradient_norm: float = float("nan")
    converged: bool = False
    reason: str = ""
    loss_trace: list = field(default_factory=list)
    damping_trace: list = field(default_factory=list)
    constraint_trace: list = field(default_factory=list)
    coincident_pairs: int = 0
    outer_iterations: int = 0

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "outer_iterations": self.outer_iterations,
            "loss": self.loss,
            "gradient_norm": self.gradient_norm,
            "converged": self.converged,
            "reason": self.reason,
            "loss_trace": list(self.loss_trace),
            "damping_trace": list(self.damping_trace),
            "constraint_trace": list(self.constraint_trace),
            "coincident_pairs": self.coincident_pairs,
        }


def pack(x: PointSet, alpha=None) -> np.ndarray:
    alpha = np.zeros(0) if alpha is None else np.asarray(alpha, dtype=float).reshape(-1)
    return np.concatenate([x.coords.T.reshape(-1), alpha])


def _split(theta, m: int, k: int, n_missing: int):
    theta = np.asarray(theta, dtype=float)
    n = m + k
    n_pos = theta.size - n_missing
    if n_pos <= 0 or n_pos % n:
        raise InvalidInputError(f"theta of length {theta.size} does not fit {n} points and {n_missing} coefficients")
    d = n_pos // n
    return theta[:n_pos].reshape(n, d).T, theta[n_pos:], d


def unpack(theta, m: int, k: int, n_missing: int = 0) -> tuple[PointSet, np.ndarray]:
    coords, alpha, _ = _split(theta, m, k, n_missing)
    return PointSet(coords, m, k), alpha.copy()


def _directions(coords, m, floor):
    diff = coords[:, :m, None] - coords[:, None, m:]  # d x M x K
    dist = np.sqrt(np.sum(diff * diff, axis=0))
    close = dist < floor
    safe = np.where(close, 1.0, dist)
    u = np.where(close[None], 0.0, diff / safe[None])
    return dist, u, int(close.sum())


def residual(theta, t: ToaMatrix, mode=SyncMode.NONE) -> np.ndarray:
    """Centered residual ``P(delta(theta) - T + alpha-scatter)``, row-major, length ``M*K``."""
    idx = missing_indices(t.mask)
    coords, alpha, _ = _split(theta, t.m, t.k, len(idx))
    diff = coords[:, : t.m, None] - coords[:, None, t.m :]
    inner = np.sqrt(np.sum(diff * diff, axis=0)) - t.in_meters()
    if len(idx):
        inner[idx[:, 0], idx[:, 1]] += alpha
    return timing_invariant_projection(inner, mode).reshape(-1)


def jacobian(theta, t: ToaMatrix, mode=SyncMode.NONE, distance_floor: float = 1e-9, return_coincident: bool = False):
    """Jacobian of :func:`residual`, shape ``(M*K, d*(M+K) + n_missing)``.

    Pairs closer than ``distance_floor`` get a zero direction.
    """
    idx = missing_indices(t.mask)
    m, k = t.m, t.k
    coords, _, d = _split(theta, m, k, len(idx))
    n = m + k
    _, u, n_close = _directions(coords, m, distance_floor)
    raw = np.zeros((m, k, n * d + len(idx)))
    rows = np.arange(m)
    cols = np.arange(k)
    for c in range(d):
        # receiver m, coordinate c sits at column m*d + c
        raw[rows[:, None], cols[None, :], (rows * d + c)[:, None]] = u[c]
        raw[rows[:, None], cols[None, :], ((m + cols) * d + c)[None, :]] = -u[c]
    for j, (a, b) in enumerate(idx):
        raw[a, b, n * d + j] = 1.0
    jac = timing_invariant_projection(raw, mode).reshape(m * k, -1)
    if return_coincident:
        return jac, n_close
    return jac


def constraint_residual(theta, m: int, k: int, equalities, n_missing: int = 0) -> np.ndarray:
    """``|x_i - x_j|^2 - d_ij^2`` for every ``(i, j, d_ij)`` in ``equalities``."""
    coords, _, _ = _split(theta, m, k, n_missing)
    eq = np.asarray(equalities, dtype=float).reshape(-1, 3)
    i, j = eq[:, 0].astype(int), eq[:, 1].astype(int)
    diff = coords[:, i] - coords[:, j]
    return np.sum(diff * diff, axis=0) - eq[:, 2] ** 2


def constraint_jacobian(theta, m: int, k: int, equalities, n_missing: int = 0) -> np.ndarray:
    coords, _, d = _split(theta, m, k, n_missing)
    eq = np.asarray(equalities, dtype=float).reshape(-1, 3)
    out = np.zeros((eq.shape[0], np.asarray(theta).size))
    for row, (i, j, _) in enumerate(eq):
        i, j = int(i), int(j)
        diff = 2.0 * (coords[:, i] - coords[:, j])
        out[row, i * d : (i + 1) * d] += diff
        out[row, j * d : (j + 1) * d] -= diff
    return out


def _lm_core(fun, jac, theta0, config: LmConfig, report: RefineReport):
    """Damped Gauss-Newton on ``0.5 |fun(theta)|^2``; returns the final theta."""
    theta = np.array(theta0, dtype=float)
    r = fun(theta)
    cost = 0.5 * float(r @ r)
    if not np.isfinite(cost):
        raise NonFiniteLossError("non-finite loss at the starting point")
    lam = config.initial_damping
    report.loss_trace.append(cost)
    grad_norm = float("inf")
    for it in range(config.max_iterations):
        jm = jac(theta)
        grad = jm.T @ r
        grad_norm = float(np.max(np.abs(grad), initial=0.0))
        report.iterations += 1
        if grad_norm < config.gradient_tolerance:
            report.converged, report.reason = True, "gradient"
            break
        normal = jm.T @ jm
        accepted = False
        while lam <= config.max_damping:
            try:
                factor = scipy.linalg.cho_factor(normal + lam * np.eye(normal.shape[0]))
            except np.linalg.LinAlgError:
                lam *= config.damping_increase
                continue
            step = scipy.linalg.cho_solve(factor, grad)
            candidate = theta - step
            r_new = fun(candidate)
            cost_new = 0.5 * float(r_new @ r_new)
            if not np.isfinite(cost_new):
                raise NonFiniteLossError(f"non-finite loss at iteration {it} (damping {lam:g})")
            if cost_new < cost:
                accepted = True
                break
            lam *= config.damping_increase
        if not accepted:
            report.converged, report.reason = True, "no_decrease"
            break
        rel = (cost - cost_new) / max(cost, np.finfo(float).tiny)
        theta, r, cost = candidate, r_new, cost_new
        report.loss_trace.append(cost)
        report.damping_trace.append(lam)
        lam = max(lam / config.damping_decrease, 1e-15)
        if rel < config.relative_loss_tolerance:
            report.converged, report.reason = True, "relative_loss"
            break
    else:
        report.reason = "max_iterations"
    report.loss = cost
    report.gradient_norm = grad_norm
    return theta


def lm_minimize(theta0, t: ToaMatrix, mode=SyncMode.NONE, config: LmConfig | None = None):
    """Minimize the timing-invariant loss from ``theta0``.

    Returns ``(theta, report)``; ``report.loss`` is ``0.5 |residual|^2`` at the
    returned ``theta``.
    """
    config = config or LmConfig()
    mode = SyncMode.parse(mode)
    theta0 = np.asarray(theta0, dtype=float)
    if not np.all(np.isfinite(theta0)):
        raise InvalidInputError("theta0 must be finite")
    report = RefineReport()

    def jac(theta):
        jm, n_close = jacobian(theta, t, mode, config.distance_floor, return_coincident=True)
        report.coincident_pairs = max(report.coincident_pairs, n_close)
        return jm

    theta = _lm_core(lambda th: residual(th, t, mode), jac, theta0, config, report)
    if report.coincident_pairs:
        logger.warning("%d receiver-source pairs closer than %g m", report.coincident_pairs, config.distance_floor)
    return theta, report


def lm_minimize_constrained(theta0, t: ToaMatrix, mode=SyncMode.NONE, equalities=(), lm: LmConfig | None = None,
                            al: AugLagConfig | None = None):
    """Augmented-Lagrangian LM for known distances ``(i, j, d_ij)`` (meters).

    Each outer iteration minimizes ``|f|^2 + mu |g + z / (2 mu)|^2`` by LM,
    then updates ``z += 2 mu g`` and grows ``mu``.  ``report.loss`` is the
    unconstrained timing-invariant loss at the returned point and
    ``report.constraint_trace`` holds ``max |g|`` after every outer iteration.
    """
    lm = lm or LmConfig()
    al = al or AugLagConfig()
    mode = SyncMode.parse(mode)
    equalities = np.asarray(equalities, dtype=float).reshape(-1, 3)
    if equalities.shape[0] == 0:
        raise InvalidInputError("lm_minimize_constrained needs at least one equality")
    theta = np.asarray(theta0, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise InvalidInputError("theta0 must be finite")
    m, k = t.m, t.k
    n_missing = int((~t.mask).sum())
    z = np.zeros(equalities.shape[0])
    mu = al.penalty
    report = RefineReport()
    g = constraint_residual(theta, m, k, equalities, n_missing)

    for outer in range(al.outer_iterations):
        sqrt_mu = np.sqrt(mu)
        shift = z / (2.0 * mu)

        def fun(th, sqrt_mu=sqrt_mu, shift=shift):
            f = residual(th, t, mode)
            gg = constraint_residual(th, m, k, equalities, n_missing)
            return np.concatenate([f, sqrt_mu * (gg + shift)])

        def jac(th, sqrt_mu=sqrt_mu):
            jf, n_close = jacobian(th, t, mode, lm.distance_floor, return_coincident=True)
            report.coincident_pairs = max(report.coincident_pairs, n_close)
            return np.vstack([jf, sqrt_mu * constraint_jacobian(th, m, k, equalities, n_missing)])

        inner = RefineReport()
        theta = _lm_core(fun, jac, theta, lm, inner)
        report.iterations += inner.iterations
        report.damping_trace.extend(inner.damping_trace)
        report.outer_iterations = outer + 1
        g = constraint_residual(theta, m, k, equalities, n_missing)
        g_max = float(np.max(np.abs(g)))
        report.constraint_trace.append(g_max)
        f = residual(theta, t, mode)
        report.loss_trace.append(0.5 * float(f @ f))
        if g_max < al.constraint_tolerance:
            report.converged, report.reason = True, "constraints"
            break
        z = z + 2.0 * mu * g
        mu = min(mu * al.penalty_growth, al.max_penalty)
    else:
        report.reason = "outer_budget"

    f = residual(theta, t, mode)
    report.loss = 0.5 * float(f @ f)
    report.gradient_norm = float(np.max(np.abs(jacobian(theta, t, mode, lm.distance_floor).T @ f), initial=0.0))
    return theta, report
