"""Data containers and the exception hierarchy."""

from .errors import (
    DiagnosticError,
    EvolutionAborted,
    GeoplastError,
    PreconditionError,
    ScenarioValidationError,
    SolverError,
)
from .models import (
    EnergyLedger,
    MaterialModel,
    Regime,
    Scenario,
    SolverSettings,
    StateSnapshot,
    StepStatistics,
    Trajectory,
    VerificationReport,
)

__all__ = [
    "DiagnosticError",
    "EvolutionAborted",
    "GeoplastError",
    "PreconditionError",
    "ScenarioValidationError",
    "SolverError",
    "EnergyLedger",
    "MaterialModel",
    "Regime",
    "Scenario",
    "SolverSettings",
    "StateSnapshot",
    "StepStatistics",
    "Trajectory",
    "VerificationReport",
]
