"""Solver-neutral description of the relaxation and a cvxpy-backed solver.

A :class:`ConicProgram` has two kinds of variables: one symmetric PSD block
``G`` of order ``n`` and a vector ``x`` of scalars.  Linear functionals of
``G`` are rows of sparse matrices acting on ``vec(G)`` (row-major, length
``n * n``).  Supported constraints:

* ``eq_gram @ vec(G) == eq_rhs``
* ``range_lo <= range_gram @ vec(G) <= range_hi``
* ``x[nonneg] >= 0``
* rotated cones ``2 * u_i * v >= w_i**2`` with ``u = lift_gram @ vec(G)``,
  ``v = lift_v`` (a constant) and ``w = x[lift_scalar]``
* one second-order cone ``||soc_matrix @ x + soc_offset|| <= x[soc_index]``

and the objective is ``minimize objective @ x``.

Any backend that implements :class:`ConicBackend` can be plugged into
:func:`arraycalib.sdr.solve`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

__all__ = ["ConicProgram", "ConicResult", "ConicBackend", "CvxpyBackend", "default_backend"]

OPTIMAL = "optimal"
NEAR_OPTIMAL = "near_optimal"
INFEASIBLE = "infeasible"
FAILED = "failed"


@dataclass(frozen=True)
class ConicProgram:
    order: int
    n_scalar: int
    objective: np.ndarray
    eq_gram: sp.csr_matrix
    eq_rhs: np.ndarray
    range_gram: sp.csr_matrix
    range_lo: np.ndarray
    range_hi: np.ndarray
    nonneg: np.ndarray
    lift_gram: sp.csr_matrix
    lift_scalar: np.ndarray
    lift_v: float
    soc_index: int
    soc_matrix: sp.csr_matrix
    soc_offset: np.ndarray
    labels: dict = field(default_factory=dict)

    def counts(self) -> dict:
        """Sizes of every variable and constraint group."""
        return {
            "psd_order": self.order,
            "scalars": self.n_scalar,
            "equalities": self.eq_gram.shape[0],
            "range_rows": 2 * self.range_gram.shape[0],
            "rotated_cones": self.lift_gram.shape[0],
            "second_order_cones": 1,
        }


@dataclass
class ConicResult:
    status: str
    gram: np.ndarray | None
    scalars: np.ndarray | None
    objective: float
    info: dict = field(default_factory=dict)


class ConicBackend(Protocol):
    def solve(self, program: ConicProgram) -> ConicResult: ...


class CvxpyBackend:
    """Solve a :class:`ConicProgram` through cvxpy.

    Parameters
    ----------
    solver : str
        Any installed cvxpy solver that handles PSD and second-order cones
        (``"CLARABEL"``, ``"SCS"``, ``"CVXOPT"``).
    tol : float
        Requested feasibility/optimality tolerance.
    """

    def __init__(self, solver: str = "CLARABEL", tol: float = 1e-8, verbose: bool = False, **options):
        self.solver = solver
        self.tol = tol
        self.verbose = verbose
        self.options = options

    def _solver_options(self):
        opts = dict(self.options)
        if self.solver == "CLARABEL":
            opts.setdefault("tol_gap_abs", self.tol)
            opts.setdefault("tol_gap_rel", self.tol)
            opts.setdefault("tol_feas", self.tol)
            opts.setdefault("max_iter", 500)
        elif self.solver == "SCS":
            opts.setdefault("eps_abs", self.tol)
            opts.setdefault("eps_rel", self.tol)
            opts.setdefault("max_iters", 100000)
        elif self.solver == "CVXOPT":
            opts.setdefault("abstol", self.tol)
            opts.setdefault("reltol", self.tol)
            opts.setdefault("feastol", self.tol)
        return opts

    def solve(self, program: ConicProgram) -> ConicResult:
        import cvxpy as cp

        n = program.order
        g = cp.Variable((n, n), PSD=True)
        x = cp.Variable(program.n_scalar)
        gvec = cp.reshape(g, (n * n,), order="C")
        cons = []
        if program.eq_gram.shape[0]:
            cons.append(program.eq_gram @ gvec == program.eq_rhs)
        if program.range_gram.shape[0]:
            expr = program.range_gram @ gvec
            cons += [expr >= program.range_lo, expr <= program.range_hi]
        if program.nonneg.size:
            cons.append(x[program.nonneg] >= 0)
        if program.lift_gram.shape[0]:
            u = program.lift_gram @ gvec
            w = x[program.lift_scalar]
            v = program.lift_v
            cons.append(cp.SOC(u + v, cp.vstack([np.sqrt(2.0) * w, u - v]), axis=0))
        cons.append(cp.SOC(x[program.soc_index], program.soc_matrix @ x + program.soc_offset))
        problem = cp.Problem(cp.Minimize(program.objective @ x), cons)
        try:
            problem.solve(solver=self.solver, verbose=self.verbose, **self._solver_options())
        except cp.error.SolverError as exc:
            logger.warning("conic solver %s failed: %s", self.solver, exc)
            return ConicResult(FAILED, None, None, float("nan"), {"message": str(exc)})

        info = {"solver": self.solver, "raw_status": problem.status}
        stats = problem.solver_stats
        if stats is not None:
            info["solve_time"] = stats.solve_time
            info["iterations"] = stats.num_iters
        if problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE, cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
            return ConicResult(INFEASIBLE, None, None, float("nan"), info)
        if g.value is None or x.value is None:
            return ConicResult(FAILED, None, None, float("nan"), info)
        status = OPTIMAL if problem.status == cp.OPTIMAL else NEAR_OPTIMAL
        gram = np.array(g.value, dtype=float)
        gram = 0.5 * (gram + gram.T)
        return ConicResult(status, gram, np.array(x.value, dtype=float), float(problem.value), info)


def default_backend() -> CvxpyBackend:
    return CvxpyBackend("CLARABEL")
