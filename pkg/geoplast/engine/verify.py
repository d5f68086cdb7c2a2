"""
A-posteriori certification of computed evolutions.

Stability is checked by sampling competitors, so a passing margin is a
necessary condition only: no finite sample covers every admissible state.
The energy balance, flow rule and safe-load checks are deterministic.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from geoplast.engine.damage import DamageFunctional
from geoplast.engine.discretization import (
    assemble_load,
    dirichlet_values,
    internal_force,
    strain_norm,
)
from geoplast.engine.drucker_prager import kkt_residuals
from geoplast.engine.evolution import IncrementalSolver
from geoplast.engine.tensors import SymTensor, n_components
from geoplast.models.errors import DiagnosticError, PreconditionError
from geoplast.models.models import (
    EnergyBalanceRecord,
    EnergyLedger,
    FlowRuleRecord,
    MeshKind,
    SafeLoadReport,
    Scenario,
    StabilityRecord,
    StateSnapshot,
    StepVerification,
    Trajectory,
    TrajectorySummary,
    VerificationReport,
)
from geoplast.utils.logger_config import get_logger

logger = get_logger("verify")

COMPETITOR_KINDS = ("damage", "displacement", "plastic", "joint")
AMPLITUDE_RANGE = (1e-6, 1.0)
BUMP_RADIUS = (0.05, 0.5)
INCLUSION_RTOL = 1e-12
EQUILIBRIUM_RTOL = 1e-10

SAMPLING_NOTE = (
    "stability is certified by sampling competitors; a nonnegative sampled margin is "
    "necessary, never sufficient, for global stability"
)

Seed = Union[int, Sequence[int]]


@dataclass
class _Competitor:
    kind: str
    beta: NDArray[np.float64]
    v: NDArray[np.float64]
    q: SymTensor


def energy_scale(scenario: Scenario, solver: Optional[IncrementalSolver] = None) -> float:
    """Q(e0) + k|Omega|, the reference energy of the scenario."""
    solver = solver or IncrementalSolver(scenario)
    initial = solver.initial_state()
    return initial.energy.Q + scenario.material.yield_surface.k * scenario.mesh.measure


# -- stability ------------------------------------------------------------------


def _strain_scale(snapshot: StateSnapshot, scenario: Scenario) -> float:
    k_over_gamma = scenario.material.yield_surface.k / scenario.material.hooke.gamma1
    return max(
        k_over_gamma,
        float(np.max(snapshot.e.norm(), initial=0.0)),
        float(np.max(snapshot.p.norm(), initial=0.0)),
    )


def _damage_bump(rng: np.random.Generator, scenario: Scenario) -> NDArray[np.float64]:
    mesh = scenario.mesh
    if mesh.kind == MeshKind.POINT:
        return np.ones(mesh.n_vertices)
    center = mesh.vertices[rng.integers(mesh.n_vertices)]
    radius = rng.uniform(*BUMP_RADIUS) * mesh.diameter
    dist2 = np.sum((mesh.vertices - center) ** 2, axis=1)
    return np.exp(-dist2 / (2.0 * radius**2))


def _unit_deviators(rng: np.random.Generator, dim: int, size: int) -> SymTensor:
    raw = SymTensor(dim, rng.standard_normal((size, n_components(dim)))).deviator()
    nrm = raw.norm()
    return raw / np.where(nrm > 0, nrm, 1.0)


def _competitor(
    rng: np.random.Generator, snapshot: StateSnapshot, scenario: Scenario, scale: float
) -> _Competitor:
    mesh = scenario.mesh
    tau = scenario.material.yield_surface.tau
    kind = COMPETITOR_KINDS[int(rng.integers(len(COMPETITOR_KINDS)))]
    lo, hi = np.log(AMPLITUDE_RANGE[0]), np.log(AMPLITUDE_RANGE[1])

    beta = snapshot.alpha.copy()
    v = snapshot.u.copy()
    q = snapshot.p

    if kind in ("damage", "joint"):
        bump = _damage_bump(rng, scenario)
        beta = np.clip(snapshot.alpha * (1.0 - rng.uniform() * bump), 0.0, snapshot.alpha)

    if kind in ("displacement", "joint") and mesh.free_dofs.size:
        dv = np.zeros(mesh.n_dofs)
        dv[mesh.free_dofs] = rng.standard_normal(mesh.free_dofs.size)
        size = strain_norm(dv, mesh) / math.sqrt(mesh.measure)
        if size > 0:
            v = v + np.exp(rng.uniform(lo, hi)) * scale * dv / size

    if kind in ("plastic", "joint"):
        n_el = mesh.n_elements
        nu = _unit_deviators(rng, mesh.dim, n_el)
        s = rng.uniform(0.0, 1.0, size=n_el)
        mask = rng.uniform(size=n_el) < 0.5
        mask[rng.integers(n_el)] = True
        r = np.exp(rng.uniform(lo, hi)) * scale * mask
        # dq = r (tau (1 + s) / n Id + nu) satisfies tau |dq_D| <= tr dq
        dq_comps = (nu * r).components
        dq_comps[:, : mesh.dim] += (r * tau * (1.0 + s) / mesh.dim)[:, None]
        q = q + SymTensor(mesh.dim, dq_comps)

    return _Competitor(kind=kind, beta=beta, v=v, q=q)


def check_stability(
    snapshot: StateSnapshot,
    scenario: Scenario,
    n_samples: int = 1000,
    seed: Seed = 0,
    tol_rel: float = 1e-8,
    scale: Optional[float] = None,
    solver: Optional[IncrementalSolver] = None,
    threads: int = 1,
) -> StabilityRecord:
    """Minimum over sampled competitors of RHS - LHS of the global stability inequality.

    The identity competitor is always part of the sample, so the margin is at
    most zero. A margin below ``-tol_rel * scale`` is a violation; violations
    are data, not errors.
    """
    solver = solver or IncrementalSolver(scenario)
    scale = energy_scale(scenario, solver) if scale is None else scale
    tolerance = tol_rel * scale
    F = assemble_load(snapshot.t, scenario.loading, scenario.mesh)
    base = solver.stability_functional(snapshot.u, snapshot.p, snapshot.alpha, F)
    strain_ref = _strain_scale(snapshot, scenario)

    def margin_of(child: np.random.SeedSequence) -> Tuple[float, str]:
        rng = np.random.default_rng(child)
        comp = _competitor(rng, snapshot, scenario, strain_ref)
        rhs = solver.stability_functional(comp.v, comp.q, comp.beta, F)
        rhs += solver.dissipation_increment(comp.q, snapshot.p)
        return rhs - base, comp.kind

    children = np.random.SeedSequence(seed).spawn(n_samples)
    if threads > 1 and n_samples > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(margin_of, children))
    else:
        results = [margin_of(child) for child in children]

    margin, worst = 0.0, "identity"
    for value, kind in results:
        if value < margin:
            margin, worst = value, kind
    record = StabilityRecord(margin=margin, tolerance=tolerance, samples=n_samples + 1, worst_kind=worst)
    if not record.passed:
        logger.warning(
            f"t={snapshot.t:.6g}: stability margin {margin:.3e} below -{tolerance:.3e} "
            f"({worst} competitor)"
        )
    return record


def damage_directional_derivatives(
    snapshot: StateSnapshot, scenario: Scenario, n_dirs: int = 32, seed: Seed = 0
) -> float:
    """Minimum of the alpha-derivative of the energy over admissible directions beta <= 0.

    Directions vanish where alpha = 0. A stable state has a nonnegative minimum.
    """
    functional = DamageFunctional(
        scenario.mesh, scenario.material.damage, snapshot.p.inner(snapshot.p)
    )
    grad = functional.gradient(snapshot.alpha)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    free = snapshot.alpha > 0.0
    worst = math.inf
    for _ in range(n_dirs):
        beta = -rng.uniform(size=snapshot.alpha.shape) * free
        nrm = float(np.max(np.abs(beta), initial=0.0))
        if nrm == 0.0:
            continue
        worst = min(worst, float(grad @ (beta / nrm)))
    return 0.0 if worst == math.inf else worst


# -- energy balance -------------------------------------------------------------


def _balance_residual(led: EnergyLedger, first: EnergyLedger) -> float:
    return (led.total + led.VH_cum) - (first.total + led.work_sigma_cum - led.work_load_cum)


def energy_balance_slack(scenario: Scenario, times: NDArray[np.float64]) -> NDArray[np.float64]:
    """Cumulative slack of the discrete energy balance at each time of ``times``."""
    mesh = scenario.mesh
    gamma2 = scenario.material.hooke.gamma2
    solver = IncrementalSolver(scenario)

    lifts = [dirichlet_values(float(t), scenario.loading, mesh) for t in times]
    loads = [assemble_load(float(t), scenario.loading, mesh) for t in times]
    strain_steps = np.array([0.0] + [strain_norm(b - a, mesh) for a, b in zip(lifts, lifts[1:])])

    load_steps = np.array([0.0] + [solver.dual_norm(b - a) for a, b in zip(loads, loads[1:])])
    slack = gamma2 * np.maximum.accumulate(strain_steps) * np.cumsum(strain_steps)
    slack += np.maximum.accumulate(load_steps) * np.cumsum(load_steps)
    return slack


def check_energy_balance(
    trajectory: Trajectory, scenario: Scenario, tol: Optional[float] = None
) -> List[EnergyBalanceRecord]:
    """Balance residual per snapshot, recomputed from the ledger entries."""
    if not trajectory.snapshots:
        raise DiagnosticError("trajectory has no snapshots")
    ledgers = trajectory.ledger()
    for i, led in enumerate(ledgers):
        values = np.array(list(led.to_dict().values()), dtype=float)
        if not np.all(np.isfinite(values)):
            raise DiagnosticError(f"ledger entry {i} has non-finite fields")
    tol = 1e-8 * energy_scale(scenario) if tol is None else tol
    slack = energy_balance_slack(scenario, trajectory.times)
    first = ledgers[0]
    return [
        EnergyBalanceRecord(t=snap.t, residual=_balance_residual(snap.energy, first), slack=float(s), tolerance=tol)
        for snap, s in zip(trajectory.snapshots, slack)
    ]


# -- flow rule ------------------------------------------------------------------


def check_flow_rule(prev: StateSnapshot, snapshot: StateSnapshot, scenario: Scenario) -> FlowRuleRecord:
    """Flow, yield and cone residuals of the step ``prev -> snapshot``.

    The certified flow rule pairs the increment with the backstressed stress
    ``sigma - 2 c1(alpha) p``; the pairing with ``sigma`` alone is reported
    next to it.
    """
    dp = scenario.material.yield_surface
    c1 = scenario.material.damage.c1(scenario.mesh.averaging @ snapshot.alpha)
    delta = snapshot.p - prev.p
    eta = snapshot.sigma - snapshot.p * (2.0 * c1)
    flow, yld, cone = kkt_residuals(delta, eta, dp)
    backstress_free = np.abs(dp.apex * delta.trace() - snapshot.sigma.inner(delta))
    return FlowRuleRecord(
        flow_residual=float(np.max(flow, initial=0.0)),
        backstress_free_residual=float(np.max(backstress_free, initial=0.0)),
        yield_residual=float(np.max(yld, initial=0.0)),
        cone_residual=float(np.max(cone, initial=0.0)),
    )


# -- safe load ------------------------------------------------------------------


def check_safe_load(scenario: Scenario, seed: Seed = 0) -> SafeLoadReport:
    """Ball inclusion, discrete equilibrium and integration by parts for rho(t)."""
    if scenario.safe_load is None:
        raise PreconditionError(f"scenario '{scenario.name}' has no safe-load field")
    mesh = scenario.mesh
    dp = scenario.material.yield_surface
    safe = scenario.safe_load
    radius_factor = math.sqrt(dp.tau**2 / mesh.dim + 1.0)
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    inclusion = math.inf
    equilibrium = 0.0
    ibp = 0.0
    c_rho = 0.0
    free = mesh.free_dofs
    for t in scenario.times:
        rho = safe.at(float(t), mesh)
        worst = dp.tau * rho.mean() + rho.deviator().norm() + safe.tau0 * radius_factor
        inclusion = min(inclusion, float(np.min(dp.k - worst)))
        c_rho = max(c_rho, float(np.max(rho.norm())))

        F = assemble_load(float(t), scenario.loading, mesh)
        f_rho = internal_force(rho, mesh)
        force_scale = max(float(np.linalg.norm(F)), float(np.linalg.norm(f_rho)), dp.k * mesh.measure)
        gap = (F - f_rho)[free]
        equilibrium = max(equilibrium, float(np.linalg.norm(gap)) / force_scale)

        w = dirichlet_values(float(t), scenario.loading, mesh)
        u = w.copy()
        u[free] = rng.standard_normal(free.size)
        # <L, u> - <rho, E(u) - E(w)> - <L, w>
        lhs = float(F @ u) - float(f_rho @ (u - w)) - float(F @ w)
        size = max(float(np.linalg.norm(u - w)), 1.0)
        ibp = max(ibp, abs(lhs) / (force_scale * size))

    passed = inclusion >= -INCLUSION_RTOL * dp.k and equilibrium <= EQUILIBRIUM_RTOL and ibp <= EQUILIBRIUM_RTOL
    return SafeLoadReport(
        passed=bool(passed and math.isfinite(c_rho)),
        inclusion_margin=inclusion,
        equilibrium_residual=equilibrium,
        ibp_residual=ibp,
        c_rho=c_rho,
        tau0=safe.tau0,
    )


# -- full report ----------------------------------------------------------------


def verify_trajectory(
    trajectory: Trajectory,
    scenario: Scenario,
    samples: int = 1000,
    seed: int = 0,
    tol_stab_rel: float = 1e-8,
    tol_certificate: float = 1e-8,
    tol_energy_rel: float = 1e-8,
    threads: int = 1,
) -> VerificationReport:
    if not trajectory.snapshots:
        raise PreconditionError("cannot verify an empty trajectory")
    solver = IncrementalSolver(scenario)
    scale = energy_scale(scenario, solver)
    report = VerificationReport(scenario_name=scenario.name, samples=samples, seed=seed)
    report.notes.append(SAMPLING_NOTE)

    balance = check_energy_balance(trajectory, scenario, tol=tol_energy_rel * scale)
    k = scenario.material.yield_surface.k

    snapshots = trajectory.snapshots
    for i, snap in enumerate(snapshots):
        stab = check_stability(
            snap, scenario, samples, seed=[seed, i], tol_rel=tol_stab_rel, scale=scale, solver=solver, threads=threads
        )
        if i > 0:
            prev = snapshots[i - 1]
            flow = check_flow_rule(prev, snap, scenario)
            monotone = bool(np.all(snap.alpha <= prev.alpha))
            step_size = float(np.max((snap.p - prev.p).norm(), initial=0.0))
        else:
            flow = FlowRuleRecord(0.0, 0.0, 0.0, 0.0)
            monotone = True
            step_size = 0.0
        bal = balance[i]
        report.steps.append(
            StepVerification(
                step=i,
                t=snap.t,
                stability_margin=stab.margin,
                stability_tolerance=stab.tolerance,
                energy_residual=bal.residual,
                energy_slack=bal.slack + bal.tolerance,
                flow_rule_residual=flow.flow_residual,
                backstress_free_flow_residual=flow.backstress_free_residual,
                yield_residual=flow.yield_residual,
                cone_residual=flow.cone_residual,
                alpha_monotone=monotone,
            )
        )

        where = f"step {i} (t={snap.t:.6g})"
        if not stab.passed:
            report.failures.append(f"{where}: stability margin {stab.margin:.3e} below -{stab.tolerance:.3e}")
        if not bal.passed:
            report.failures.append(
                f"{where}: energy balance residual {bal.residual:.3e} exceeds {bal.tolerance + bal.slack:.3e}"
            )
        stress_scale = k + float(np.max(snap.sigma.norm(), initial=0.0))
        if flow.yield_residual > tol_certificate * stress_scale:
            report.failures.append(f"{where}: yield residual {flow.yield_residual:.3e}")
        if flow.flow_residual > tol_certificate * stress_scale * max(step_size, 1e-300):
            report.failures.append(f"{where}: flow-rule residual {flow.flow_residual:.3e}")
        if flow.cone_residual > tol_certificate * max(step_size, 1e-300):
            report.failures.append(f"{where}: cone residual {flow.cone_residual:.3e}")
        if not monotone:
            report.failures.append(f"{where}: damage increased at some node")

    if scenario.safe_load is not None:
        report.safe_load = check_safe_load(scenario, seed=seed)
        if not report.safe_load.passed:
            report.failures.append(
                f"safe load: inclusion margin {report.safe_load.inclusion_margin:.3e}, "
                f"equilibrium {report.safe_load.equilibrium_residual:.3e}"
            )
    else:
        report.notes.append("no safe-load field given; safe-load checks skipped")

    logger.info(
        f"verified '{scenario.name}': {len(snapshots)} snapshots, "
        f"{len(report.failures)} failure(s)"
    )
    return report


# -- run summary ----------------------------------------------------------------


def summarize_trajectory(trajectory: Trajectory, scenario: Scenario) -> TrajectorySummary:
    """Irreversibility, dilatancy and energy-balance figures of a whole run."""
    if not trajectory.snapshots:
        raise PreconditionError("cannot summarize an empty trajectory")
    tau = scenario.material.yield_surface.tau
    increases = 0
    non_dilatant = 0
    for prev, snap in zip(trajectory.snapshots, trajectory.snapshots[1:]):
        increases += int(np.count_nonzero(snap.alpha > prev.alpha))
        delta = snap.p - prev.p
        slack = 1e-12 * (1.0 + delta.norm())
        non_dilatant += int(np.count_nonzero(delta.trace() < tau * delta.deviator().norm() - slack))
    balance = check_energy_balance(trajectory, scenario)
    last = trajectory.snapshots[-1]
    return TrajectorySummary(
        snapshots=len(trajectory),
        damage_increases=increases,
        final_min_alpha=float(last.alpha.min()),
        dilatancy_violations=non_dilatant,
        final_max_tr_p=float(np.max(last.p.trace())),
        max_energy_residual=max(abs(r.residual) for r in balance),
        energy_budget_used=max(abs(r.residual) / (r.tolerance + r.slack) for r in balance),
    )
