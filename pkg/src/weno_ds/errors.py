"""Exception types raised by the WENO-DS solver framework.

The CLI maps each of these onto its own exit code, so library code raises
the most specific type it can.
"""

from typing import Optional


class SolverAbort(RuntimeError):
    """A time step produced a non-finite state.

    Attributes:
        step: Index of the time step that failed, when known
    """

    def __init__(self, message: str, step: Optional[int] = None) -> None:
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)
        self.step = step


class NonPhysicalState(SolverAbort):
    """Euler state with non-positive density or pressure.

    Attributes:
        location: Grid index of the first offending point
        quantity: Which quantity went non-positive ("rho", "p" or "c^2")
    """

    def __init__(
        self,
        message: str,
        location: Optional[int] = None,
        quantity: Optional[str] = None,
        step: Optional[int] = None,
    ) -> None:
        if location is not None:
            message = f"{message} at index {location}"
        super().__init__(message, step=step)
        self.location = location
        self.quantity = quantity


class ModelFileError(ValueError):
    """Model file is malformed, inconsistent or holds non-finite parameters."""


class ProblemSpecError(ValueError):
    """Problem spec string or protocol option could not be parsed."""


class TapeError(RuntimeError):
    """Misuse of the autodiff tape, or a NaN met while differentiating."""


class RiemannSolverError(RuntimeError):
    """Exact Riemann solver hit vacuum generation or failed to converge."""


class ReferenceMissing(FileNotFoundError):
    """Reference solution is not cached and computing it was not allowed."""
