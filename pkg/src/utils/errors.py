"""
Exception hierarchy for fairalloc.

Diagnostics return violations as data; these exceptions are for inputs and
solvers that cannot proceed.
"""
from typing import Optional


class FairAllocError(Exception):
    """Base class for all fairalloc errors."""


class DataError(FairAllocError, ValueError):
    """Invalid input data: parameters, demands, probability vectors, points."""


class DimensionError(DataError):
    """Shapes that do not agree."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TraceFormatError(DataError):
    """Malformed trace file."""

    def __init__(self, message: str, line: int, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = f"line {line}" if field is None else f"line {line}, field {field}"
        super().__init__(f"{where}: {message}")


class ConvergenceError(FairAllocError, RuntimeError):
    """An iterative solver reached its iteration cap."""

    def __init__(self, message: str, gap: float, iterations: int):
        self.gap = gap
        self.iterations = iterations
        super().__init__(f"{message} (gap={gap!r} after {iterations} iterations)")
