"""Exception hierarchy shared by the solver library and the CLI.

Each class carries the process exit code the CLI returns for it.
"""

from typing import Optional


class WignerError(Exception):
    """Base class for all solver errors."""

    exit_code: int = 1


class ConfigError(WignerError, ValueError):
    """Invalid run configuration or argument."""

    exit_code = 2

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        location = ""
        if key:
            location = f"{key}"
            if line is not None:
                location += f" (line {line})"
            location += ": "
        super().__init__(f"{location}{message}")


class NumericalError(WignerError):
    """A numerical procedure could not produce a trustworthy result."""

    exit_code = 3


class CFLViolationError(NumericalError, ValueError):
    """Step plan violates |lambda|max * dt / dx <= 1."""

    def __init__(self, courant: float):
        self.courant = courant
        super().__init__(f"Courant number {courant:.6g} exceeds 1")


class NumericalAbortError(NumericalError):
    """Non-finite values appeared in the evolving field."""

    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)


class ConvergenceError(NumericalError):
    """An iterative or eigenvalue solve failed."""

    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        if index is not None:
            message = f"{message} (index {index})"
        super().__init__(message)


class DimensionError(NumericalError, ValueError):
    """Array shapes or grids do not match."""


class OutputError(WignerError):
    """Results could not be written."""

    exit_code = 4
