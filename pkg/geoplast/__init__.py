"""
geoplast - quasistatic evolutions of Drucker-Prager plasticity coupled with damage.

Each time step of a scenario minimizes the incremental energy by alternating
between the displacement/plastic-strain block and the damage block; the
results are certified a posteriori for irreversibility, stability, energy
balance and the flow rule.
"""

from .engine.evolution import IncrementalSolver, run_evolution
from .engine.storage import read_trajectory, write_trajectory
from .engine.verify import verify_trajectory
from .models.errors import (
    DiagnosticError,
    EvolutionAborted,
    GeoplastError,
    PreconditionError,
    ScenarioValidationError,
    SolverError,
)
from .models.models import Scenario, StateSnapshot, Trajectory, VerificationReport
from .utils.scenario_loader import build_scenario, parse_scenario

__version__ = "0.1.0"
__all__ = [
    "IncrementalSolver",
    "run_evolution",
    "read_trajectory",
    "write_trajectory",
    "verify_trajectory",
    "DiagnosticError",
    "EvolutionAborted",
    "GeoplastError",
    "PreconditionError",
    "ScenarioValidationError",
    "SolverError",
    "Scenario",
    "StateSnapshot",
    "Trajectory",
    "VerificationReport",
    "build_scenario",
    "parse_scenario",
]
