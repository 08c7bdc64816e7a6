"""End-to-end localization: relaxation, spectral initialization, LM, timings."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import sdr
from .conic import ConicBackend
from .dof import DofReport, dof_report
from .errors import NoSolutionError, UnderdeterminedError
from .geometry import PointSet, cross_distances
from .refine import AugLagConfig, LmConfig, RefineReport, lm_minimize, lm_minimize_constrained, pack, unpack
from .timing import TimingEstimate, recover_timing
from .toa import SyncMode, ToaMatrix, constant_offset_reduce

logger = logging.getLogger(__name__)

__all__ = ["LocalizationResult", "localize"]


@dataclass
class LocalizationResult:
    points: PointSet
    alpha: np.ndarray
    timing: TimingEstimate | None
    mode: SyncMode
    sdr_points: PointSet
    sdr_objective: float
    sdr_status: str
    sdr_tail_mass: float
    report: RefineReport
    dof: DofReport
    stage_seconds: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


def localize(
    toa: ToaMatrix,
    d: int = 3,
    mode=SyncMode.NONE,
    distance_equalities=(),
    distance_bounds=(),
    constant_offset=None,
    backend: ConicBackend | None = None,
    lm: LmConfig | None = None,
    al: AugLagConfig | None = None,
) -> LocalizationResult:
    """Jointly localize receivers and sources from arrival times.

    Parameters
    ----------
    toa : ToaMatrix
        Measured times (seconds) with observation mask and speed.
    d : int
        Dimension of the embedding space.
    mode : SyncMode
        Which timings are unknown.  Ignored when ``constant_offset`` is
        given, which forces ``sources_synced`` after removing the delays.
    distance_equalities : sequence of (i, j, distance)
        Known distances (meters) between points of the full set, receivers
        first.  They enter the relaxation as linear equalities and the
        refinement through an augmented Lagrangian.
    distance_bounds : sequence of (i, j, lower, upper)
        Distance bounds; used by the relaxation only.
    constant_offset : (K,) array, optional
        Known emission delays of the sources relative to one unknown start.

    Raises
    ------
    NoSolutionError
        If the relaxation is infeasible or the solver fails.
    """
    mode = SyncMode.parse(mode)
    warnings = []
    if constant_offset is not None:
        toa = constant_offset_reduce(toa, constant_offset)
        mode = SyncMode.SOURCES_SYNCED
    report_dof = dof_report(toa.m, toa.k, d, mode)
    if not report_dof.feasible:
        msg = f"M={toa.m}, K={toa.k} gives {report_dof.measurements} measurements for {report_dof.dof} degrees of freedom"
        logger.warning(msg)
        warnings.append(msg)

    stages = {}
    tic = time.perf_counter()
    problem = sdr.SdrProblem.from_toa(toa, d, mode, distance_equalities, distance_bounds)
    solution = sdr.solve(problem, backend)
    stages["sdr"] = time.perf_counter() - tic
    if not solution.ok:
        raise NoSolutionError(f"relaxation returned status {solution.solver_status}")
    init, tail = sdr.extract_points(solution, d)

    tic = time.perf_counter()
    theta0 = pack(init, solution.alpha)
    if len(problem.distance_equalities):
        theta, report = lm_minimize_constrained(theta0, toa, mode, problem.distance_equalities, lm, al)
    else:
        theta, report = lm_minimize(theta0, toa, mode, lm)
    stages["refine"] = time.perf_counter() - tic
    points, alpha = unpack(theta, toa.m, toa.k, len(problem.missing))

    tic = time.perf_counter()
    try:
        timing = recover_timing(cross_distances(points), toa, mode)
    except UnderdeterminedError as exc:
        warnings.append(f"timing recovery skipped: {exc}")
        timing = None
    stages["timing"] = time.perf_counter() - tic

    return LocalizationResult(
        points=points,
        alpha=alpha,
        timing=timing,
        mode=mode,
        sdr_points=init,
        sdr_objective=solution.objective,
        sdr_status=solution.solver_status,
        sdr_tail_mass=tail,
        report=report,
        dof=report_dof,
        stage_seconds=stages,
        warnings=warnings,
    )
