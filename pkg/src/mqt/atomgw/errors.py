"""Exception hierarchy shared by all modules of the atom-interferometer toolkit."""

from __future__ import annotations


class AtomGWError(Exception):
    """Root of every error raised by this package."""


class ValidationError(AtomGWError, ValueError):
    """A domain invariant or a precondition was violated."""


class ScenarioParseError(ValidationError):
    """A scenario file could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None) -> None:
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class SimulationError(AtomGWError, RuntimeError):
    """A simulation could not be carried out for a valid input."""


class ConvergenceError(SimulationError):
    """An implicit solve did not converge."""


class NoIntersectionError(SimulationError):
    """A light pulse never reaches the targeted arm."""


class VertexCollisionError(SimulationError):
    """Two vertices on one arm are out of order or indistinguishable."""


class ClosureError(SimulationError):
    """The two arms do not reconverge at the final beamsplitter."""


class ResidenceError(SimulationError):
    """An arm spends longer in the excited state than the atomic lifetime allows."""


class SequenceOverlapError(SimulationError):
    """Pulse fragments of a sequence collide in time."""


class DegenerateFitError(SimulationError):
    """An ellipse fit has no unique solution."""
