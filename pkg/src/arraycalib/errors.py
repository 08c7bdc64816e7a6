"""Exception hierarchy shared by every module of the package."""


class ArrayCalibError(Exception):
    """Base class for all errors raised by arraycalib."""


class InvalidDimensionError(ArrayCalibError, ValueError):
    pass


class InvalidInputError(ArrayCalibError, ValueError):
    pass


class InvalidParameterError(ArrayCalibError, ValueError):
    pass


class InvalidProblemError(ArrayCalibError, ValueError):
    pass


class NoSolutionError(ArrayCalibError, RuntimeError):
    """Raised when points are requested from a failed or infeasible relaxation."""


class NonFiniteLossError(ArrayCalibError, FloatingPointError):
    pass


class UnderdeterminedError(ArrayCalibError, ValueError):
    """The timing system has fewer independent equations than unknowns."""


class GenerationError(ArrayCalibError, RuntimeError):
    pass


class PlacementError(ArrayCalibError, ValueError):
    pass


class ParseError(ArrayCalibError, ValueError):
    """Malformed TOA/geometry file. Carries an optional (row, column) location."""

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ConfigError(ArrayCalibError, ValueError):
    pass
