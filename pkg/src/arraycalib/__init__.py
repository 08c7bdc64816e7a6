"""Joint localization of unsynchronized receivers and sources from arrival times.

The pipeline solves a semidefinite relaxation of a timing-invariant loss,
extracts a low-rank initial configuration and refines it with
Levenberg-Marquardt.  Clock offsets and emission times are recovered
afterwards by least squares.
"""

from .dof import DofReport, degrees_of_freedom, dof_report, min_sources
from .errors import (
    ArrayCalibError,
    ConfigError,
    GenerationError,
    InvalidDimensionError,
    InvalidInputError,
    InvalidParameterError,
    InvalidProblemError,
    NoSolutionError,
    NonFiniteLossError,
    ParseError,
    PlacementError,
    UnderdeterminedError,
)
from .evaluation import CLIP_FLOOR, AlignedResult, SweepSummary, localization_error, procrustes_align, sweep_statistics
from .geometry import GramMatrix, PointSet, cross_distances, gram_from_points, points_from_gram
from .pipeline import LocalizationResult, localize
from .refine import AugLagConfig, LmConfig, RefineReport, lm_minimize, lm_minimize_constrained
from .scenario import Instance, ScenarioConfig, generate, plant_subarray, square_template
from .sdr import SdrProblem, SdrSolution, extract_points
from .sdr import solve as solve_sdr
from .timing import TimingEstimate, recover_timing
from .toa import SyncMode, Timing, ToaMatrix, constant_offset_reduce, forward_toa, loss, timing_invariant_projection

__version__ = "0.1.0"
