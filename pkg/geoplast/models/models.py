from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import TYPE_CHECKING, Any, Dict, List, Optional

import numpy as np

from geoplast.models.errors import DiagnosticError

if TYPE_CHECKING:
    from geoplast.engine.damage import DamageLaw
    from geoplast.engine.discretization import LoadHistory, Mesh, SafeLoadField
    from geoplast.engine.drucker_prager import DruckerPrager
    from geoplast.engine.tensors import HookeParams, SymTensor


class Regime(str, Enum):
    ELASTIC = "elastic"
    CONE_INTERIOR = "cone_interior"
    CONE_BOUNDARY = "cone_boundary"


REGIME_BY_CODE = (Regime.ELASTIC, Regime.CONE_INTERIOR, Regime.CONE_BOUNDARY)


class MeshKind(str, Enum):
    POINT = "point"
    SEGMENT = "segment"
    RECT = "rect"


class BoundaryKind(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


@dataclass
class SolverSettings:
    """Tolerances and iteration caps for one evolution."""

    tol_uep: float = 1e-10
    tol_alpha: float = 1e-10
    tol_altmin: float = 1e-10
    max_sweeps: int = 200
    max_newton_iters: int = 60
    max_alpha_iters: int = 5000
    multi_start: int = 0
    seed: int = 0
    initial_check_samples: int = 64
    threads: int = 1

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SolverSettings":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown solver settings: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class MaterialModel:
    hooke: "HookeParams"
    yield_surface: "DruckerPrager"
    damage: "DamageLaw"

    @property
    def dim(self) -> int:
        return self.hooke.dim

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": self.hooke.lam,
            "mu": self.hooke.mu,
            "tau": self.yield_surface.tau,
            "k": self.yield_surface.k,
            "c_bar": self.damage.c_bar,
            "w_d": self.damage.w_d,
            "w_grad": self.damage.w_grad,
            "alpha_cap": self.damage.alpha_cap,
            "d_shift": self.damage.d_shift,
        }


@dataclass
class InitialData:
    """Initial damage (nodal) and plastic strain (per element, components)."""

    alpha0: np.ndarray
    p0: np.ndarray


@dataclass
class Scenario:
    name: str
    mesh: "Mesh"
    material: MaterialModel
    loading: "LoadHistory"
    horizon: float
    time_steps: int
    initial: InitialData
    solver: SolverSettings = field(default_factory=SolverSettings)
    safe_load: Optional["SafeLoadField"] = None
    description: str = ""
    # Source document with overrides applied; written back next to the results.
    document: Dict[str, Any] = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.time_steps + 1)


@dataclass
class EnergyLedger:
    """Energy and dissipation bookkeeping at one time."""

    Q: float = 0.0
    D: float = 0.0
    grad: float = 0.0
    Qtilde: float = 0.0
    VH_cum: float = 0.0
    work_sigma_cum: float = 0.0
    work_load_cum: float = 0.0
    load_term: float = 0.0
    balance_residual: float = 0.0

    @property
    def stored(self) -> float:
        return self.Q + self.D + self.grad + self.Qtilde

    @property
    def total(self) -> float:
        """Stability functional value ``Q + D + grad + Qtilde - <L, u>``."""
        return self.stored - self.load_term

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EnergyLedger":
        missing = [f.name for f in fields(cls) if f.name not in data]
        if missing:
            raise DiagnosticError(f"ledger entry misses fields: {', '.join(missing)}")
        return cls(**{f.name: float(data[f.name]) for f in fields(cls)})


LEDGER_COLUMNS = tuple(f.name for f in fields(EnergyLedger))


@dataclass
class StepStatistics:
    sweeps: int = 0
    newton_iterations: int = 0
    alpha_iterations: int = 0
    objective: float = 0.0
    relative_decrease: float = 0.0
    starts: int = 1
    uep_residual: float = 0.0
    alpha_residual: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class StateSnapshot:
    t: float
    alpha: np.ndarray
    u: np.ndarray
    e: "SymTensor"
    p: "SymTensor"
    sigma: "SymTensor"
    energy: EnergyLedger
    stats: StepStatistics = field(default_factory=StepStatistics)


@dataclass
class Trajectory:
    scenario_name: str
    snapshots: List[StateSnapshot] = field(default_factory=list)

    def append(self, snapshot: StateSnapshot) -> None:
        if self.snapshots and not snapshot.t > self.snapshots[-1].t:
            raise ValueError(
                f"snapshot times must increase: {snapshot.t} after {self.snapshots[-1].t}"
            )
        self.snapshots.append(snapshot)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def ledger(self) -> List[EnergyLedger]:
        return [s.energy for s in self.snapshots]

    def __len__(self) -> int:
        return len(self.snapshots)


# -- verification records ----------------------------------------------------


@dataclass
class StabilityRecord:
    margin: float
    tolerance: float
    samples: int
    worst_kind: str = "identity"

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tolerance


@dataclass
class EnergyBalanceRecord:
    t: float
    residual: float
    slack: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.residual) <= self.tolerance + self.slack


@dataclass
class FlowRuleRecord:
    flow_residual: float
    backstress_free_residual: float
    yield_residual: float
    cone_residual: float


@dataclass
class StepVerification:
    step: int
    t: float
    stability_margin: float
    stability_tolerance: float
    energy_residual: float
    energy_slack: float
    flow_rule_residual: float
    backstress_free_flow_residual: float
    yield_residual: float
    cone_residual: float
    alpha_monotone: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class TrajectorySummary:
    """Whole-run irreversibility, dilatancy and energy figures."""

    snapshots: int
    damage_increases: int
    final_min_alpha: float
    dilatancy_violations: int
    final_max_tr_p: float
    max_energy_residual: float
    energy_budget_used: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SafeLoadReport:
    passed: bool
    inclusion_margin: float
    equilibrium_residual: float
    ibp_residual: float
    c_rho: float
    tau0: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class VerificationReport:
    scenario_name: str
    samples: int
    seed: int
    steps: List[StepVerification] = field(default_factory=list)
    safe_load: Optional[SafeLoadReport] = None
    failures: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario_name,
            "samples": self.samples,
            "seed": self.seed,
            "passed": self.passed,
            "failures": list(self.failures),
            "notes": list(self.notes),
            "safe_load": self.safe_load.to_dict() if self.safe_load else None,
            "steps": [s.to_dict() for s in self.steps],
        }
