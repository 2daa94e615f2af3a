"""Exception hierarchy shared by the library and the command-line interface."""

from typing import Optional

import numpy as np


class PwsdeError(Exception):
    """Base class for all errors raised by pwsde."""
    pass


class ArgumentError(PwsdeError, ValueError):
    """Raised when an operation receives arguments outside its preconditions."""
    pass


class ConfigError(PwsdeError):
    """Raised when an experiment configuration cannot be parsed or resolved."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        """Initialize a ConfigError.

        Args:
            message: Human readable description.
            line: 1-based line number in the configuration file, if known.
        """
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelError(PwsdeError):
    """Raised when the SDE violates an assumption the transform relies on."""
    pass


class ConstructionError(ModelError):
    """Raised when no localization constant passes the contraction certificate."""
    pass


class NumericError(PwsdeError):
    """Raised when a computation produces non-finite values or fails to converge."""

    def __init__(self, message: str, step: Optional[int] = None, state: Optional[np.ndarray] = None) -> None:
        """Initialize a NumericError.

        Args:
            message: Human readable description.
            step: Time-step index at which the failure happened.
            state: Offending state vector(s).
        """
        self.step = step
        self.state = None if state is None else np.array(state, copy=True)
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)


class DomainError(NumericError, ValueError):
    """Raised when a point lies where an operation is not defined."""
    pass


class SamplingError(NumericError):
    """Raised when random sampling cannot produce enough admissible samples."""
    pass
