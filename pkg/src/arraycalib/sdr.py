"""Semidefinite relaxation over the full Gram matrix.

The nonconvex problem "find a rank-d centered Gram matrix whose cross block
of squared distances has entrywise square root matching the centered TOA
data" is relaxed by introducing a surrogate distance matrix ``B`` with
``b_mk**2 <= L(G)_mk`` and ``b_mk >= 0`` and dropping every rank constraint.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .conic import FAILED, INFEASIBLE, NEAR_OPTIMAL, OPTIMAL, ConicBackend, ConicProgram, default_backend
from .errors import InvalidProblemError, NoSolutionError
from .geometry import GramMatrix, PointSet, cross_block, points_from_gram, spectral_tail_mass
from .toa import SyncMode, ToaMatrix, missing_indices, timing_invariant_projection

logger = logging.getLogger(__name__)

__all__ = ["SdrProblem", "SdrSolution", "build", "solve", "extract_points", "projection_operator"]


@dataclass(frozen=True)
class SdrProblem:
    """Inputs of the relaxation.

    ``target`` is the speed-scaled TOA matrix in meters; entries listed in
    ``missing`` are ignored (a free coefficient absorbs them).  Distance
    constraints index the full point set (receivers ``0..m-1`` then sources
    ``m..m+k-1``) and are given in meters.
    """

    m: int
    k: int
    d: int
    target: np.ndarray
    mode: SyncMode = SyncMode.NONE
    missing: tuple = ()
    distance_equalities: tuple = ()
    distance_bounds: tuple = ()

    def __post_init__(self):
        n = self.m + self.k
        target = np.array(self.target, dtype=float)
        if target.shape != (self.m, self.k):
            raise InvalidProblemError(f"target shape {target.shape} != ({self.m}, {self.k})")
        if self.d < 1:
            raise InvalidProblemError(f"dimension must be positive, got {self.d}")
        if n < self.d + 1:
            raise InvalidProblemError(f"need at least d + 1 = {self.d + 1} points, got {n}")
        missing = tuple(sorted({(int(a), int(b)) for a, b in self.missing}))
        if len(missing) != len(self.missing):
            raise InvalidProblemError("duplicate missing indices")
        for a, b in missing:
            if not (0 <= a < self.m and 0 <= b < self.k):
                raise InvalidProblemError(f"missing index ({a}, {b}) out of range")
        target = target.copy()
        for a, b in missing:
            target[a, b] = 0.0
        if not np.all(np.isfinite(target)):
            raise InvalidProblemError("observed target entries must be finite")
        eqs = tuple((int(i), int(j), float(v)) for i, j, v in self.distance_equalities)
        for i, j, v in eqs:
            self._check_pair(i, j, n)
            if v < 0:
                raise InvalidProblemError(f"distance ({i}, {j}) must be nonnegative")
        bounds = tuple((int(i), int(j), float(lo), float(hi)) for i, j, lo, hi in self.distance_bounds)
        for i, j, lo, hi in bounds:
            self._check_pair(i, j, n)
            if not 0 <= lo <= hi:
                raise InvalidProblemError(f"bounds for ({i}, {j}) must satisfy 0 <= lower <= upper")
        target.setflags(write=False)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "mode", SyncMode.parse(self.mode))
        object.__setattr__(self, "missing", missing)
        object.__setattr__(self, "distance_equalities", eqs)
        object.__setattr__(self, "distance_bounds", bounds)

    @staticmethod
    def _check_pair(i, j, n):
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise InvalidProblemError(f"invalid point pair ({i}, {j}) for {n} points")

    @classmethod
    def from_toa(cls, t: ToaMatrix, d: int, mode=SyncMode.NONE, distance_equalities=(), distance_bounds=()):
        missing = tuple(map(tuple, missing_indices(t.mask)))
        return cls(t.m, t.k, d, t.in_meters(), mode, missing, tuple(distance_equalities), tuple(distance_bounds))

    @property
    def n(self) -> int:
        return self.m + self.k

    @property
    def mask(self) -> np.ndarray:
        mask = np.ones((self.m, self.k), dtype=bool)
        for a, b in self.missing:
            mask[a, b] = False
        return mask


@dataclass
class SdrSolution:
    """Primal values of a solved relaxation.

    ``objective`` is ``0.5 * ||P(B - T + alpha-scatter)||_F^2`` evaluated at
    the returned point, matching the convention of :func:`arraycalib.toa.loss`.
    """

    g: GramMatrix | None
    b: np.ndarray | None
    alpha: np.ndarray | None
    objective: float
    solver_status: str
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.solver_status in (OPTIMAL, NEAR_OPTIMAL)


def projection_operator(m: int, k: int, mode=SyncMode.NONE) -> np.ndarray:
    """Dense ``MK x MK`` matrix of the centering acting on row-major ``vec``."""
    mode = SyncMode.parse(mode)
    jm = np.eye(m) - 1.0 / m
    jk = np.eye(k) - 1.0 / k
    if mode is SyncMode.RECEIVERS_SYNCED:
        jk = np.eye(k)
    elif mode is SyncMode.SOURCES_SYNCED:
        jm = np.eye(m)
    return np.kron(jm, jk)


def _edm_functional(i: int, j: int, n: int) -> dict:
    """Coefficients of ``D(G)_ij = G_ii + G_jj - G_ij - G_ji`` on row-major vec(G)."""
    return {i * n + i: 1.0, j * n + j: 1.0, i * n + j: -1.0, j * n + i: -1.0}


def _rows_to_csr(rows: list[dict], ncols: int) -> sp.csr_matrix:
    data, ri, ci = [], [], []
    for r, row in enumerate(rows):
        for c, v in row.items():
            ri.append(r)
            ci.append(c)
            data.append(v)
    return sp.csr_matrix((data, (ri, ci)), shape=(len(rows), ncols))


def build(problem: SdrProblem) -> ConicProgram:
    """Assemble the relaxation as a :class:`ConicProgram`.

    Scalar layout: ``b`` (``m*k`` entries, row-major), then one ``alpha`` per
    missing entry, then the epigraph variable ``s`` minimized subject to
    ``||P(B - T + alpha-scatter)|| <= s``.
    """
    m, k, n = problem.m, problem.k, problem.n
    mk = m * k
    n_alpha = len(problem.missing)
    n_scalar = mk + n_alpha + 1
    s_index = n_scalar - 1

    # G 1 = 0
    centering = [{i * n + j: 1.0 for j in range(n)} for i in range(n)]
    eq_rows = centering + [_edm_functional(i, j, n) for i, j, _ in problem.distance_equalities]
    eq_rhs = np.concatenate([np.zeros(n), [v * v for _, _, v in problem.distance_equalities]])

    range_rows = [_edm_functional(i, j, n) for i, j, _, _ in problem.distance_bounds]
    range_lo = np.array([lo * lo for _, _, lo, _ in problem.distance_bounds], dtype=float)
    range_hi = np.array([hi * hi for _, _, _, hi in problem.distance_bounds], dtype=float)

    lift_rows = [_edm_functional(a, m + b, n) for a in range(m) for b in range(k)]

    proj = projection_operator(m, k, problem.mode)
    select = np.zeros((mk, n_scalar))
    select[:, :mk] = np.eye(mk)
    for col, (a, b) in enumerate(problem.missing):
        select[a * k + b, mk + col] = 1.0
    soc_matrix = sp.csr_matrix(proj @ select)
    soc_offset = -proj @ problem.target.reshape(-1)

    objective = np.zeros(n_scalar)
    objective[s_index] = 1.0
    return ConicProgram(
        order=n,
        n_scalar=n_scalar,
        objective=objective,
        eq_gram=_rows_to_csr(eq_rows, n * n),
        eq_rhs=eq_rhs,
        range_gram=_rows_to_csr(range_rows, n * n),
        range_lo=range_lo,
        range_hi=range_hi,
        nonneg=np.arange(mk),
        lift_gram=_rows_to_csr(lift_rows, n * n),
        lift_scalar=np.arange(mk),
        lift_v=0.5,
        soc_index=s_index,
        soc_matrix=soc_matrix,
        soc_offset=soc_offset,
        labels={"b": slice(0, mk), "alpha": slice(mk, mk + n_alpha), "s": s_index},
    )


def _scatter(problem: SdrProblem, alpha) -> np.ndarray:
    out = np.zeros((problem.m, problem.k))
    for (a, b), v in zip(problem.missing, alpha):
        out[a, b] = v
    return out


def _check_invariants(problem: SdrProblem, g: np.ndarray, b: np.ndarray) -> list[str]:
    n = problem.n
    scale = max(1.0, float(np.linalg.norm(g, 2)))
    problems = []
    if np.max(np.abs(g.sum(axis=1))) > 1e-6 * n * scale:
        problems.append("centering")
    if np.linalg.eigvalsh(g)[0] < -1e-6 * scale:
        problems.append("psd")
    if b.min() < -1e-8 * max(1.0, float(np.abs(b).max())):
        problems.append("b_nonneg")
    lifted = cross_block(GramMatrix(g, problem.m, problem.k))
    if np.max(b * b - lifted) > 1e-6 * scale:
        problems.append("lift")
    return problems


def solve(problem: SdrProblem, backend: ConicBackend | None = None) -> SdrSolution:
    """Solve the relaxation; failures are reported through ``solver_status``."""
    backend = backend or default_backend()
    program = build(problem)
    result = backend.solve(program)
    info = dict(result.info)
    info["counts"] = program.counts()
    if result.status in (INFEASIBLE, FAILED) or result.gram is None:
        return SdrSolution(None, None, None, float("nan"), result.status, info)

    x = result.scalars
    mk = problem.m * problem.k
    b = x[:mk].reshape(problem.m, problem.k)
    alpha = x[mk : mk + len(problem.missing)]
    g = result.gram
    status = result.status
    violated = _check_invariants(problem, g, b)
    if violated:
        info["violated"] = violated
        logger.warning("relaxation solution violates %s beyond tolerance", ", ".join(violated))
        status = NEAR_OPTIMAL if status == OPTIMAL else status
    r = timing_invariant_projection(b - problem.target + _scatter(problem, alpha), problem.mode)
    objective = 0.5 * float(np.sum(r * r))
    gram = GramMatrix(g, problem.m, problem.k)
    return SdrSolution(gram, b, alpha, objective, status, info)


def extract_points(solution: SdrSolution, d: int) -> tuple[PointSet, float]:
    """Spectral point extraction; also returns the eigenvalue tail mass beyond ``d``."""
    if not solution.ok or solution.g is None:
        raise NoSolutionError(f"cannot extract points from a {solution.solver_status} relaxation")
    return points_from_gram(solution.g, d), spectral_tail_mass(solution.g, d)
