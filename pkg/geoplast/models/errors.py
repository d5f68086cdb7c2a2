"""Exception hierarchy shared by the engine, the loaders and the CLI."""

from __future__ import annotations

from typing import Any, List, Optional


class GeoplastError(Exception):
    """Base class for every error raised by geoplast."""


class ScenarioValidationError(GeoplastError, ValueError):
    """Raised when a scenario document fails validation.

    Carries every problem found, not just the first one.
    """

    def __init__(self, errors: List[str]) -> None:
        self.errors = list(errors)
        summary = "; ".join(self.errors) if self.errors else "invalid scenario"
        super().__init__(summary)


class SolverError(GeoplastError, RuntimeError):
    """A numerical solve did not reach its certificate."""

    def __init__(
        self,
        message: str,
        residual: float = float("nan"),
        iterations: int = 0,
        stage: str = "",
    ) -> None:
        self.residual = residual
        self.iterations = iterations
        self.stage = stage
        super().__init__(
            f"[{stage or 'solver'}] {message} "
            f"(residual={residual:.3e}, iterations={iterations})"
        )


class EvolutionAborted(SolverError):
    """A time step failed; ``partial`` holds the trajectory computed so far."""

    def __init__(
        self, message: str, partial: Any, step: int, cause: Optional[Exception] = None
    ) -> None:
        self.partial = partial
        self.step = step
        super().__init__(
            message,
            residual=getattr(cause, "residual", float("nan")),
            iterations=getattr(cause, "iterations", 0),
            stage=getattr(cause, "stage", "incremental_step"),
        )


class DiagnosticError(GeoplastError, RuntimeError):
    """An internal consistency check failed (e.g. a plastic increment left dom H)."""


class PreconditionError(GeoplastError, ValueError):
    """An operation was called on data that violates its preconditions."""


class ResultFileError(DiagnosticError):
    """A result directory lacks a file or holds one that cannot be parsed."""
