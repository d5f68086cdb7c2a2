"""
Incremental quasistatic driver.

Each time step minimizes the incremental energy

    Phi(u, p, alpha) = Q + D + grad + Qtilde + sum |elem| H(p - p_prev) - <L(t), u>

over admissible u (u = w(t) on Dirichlet dofs), element plastic strains p and
nodal damage 0 <= alpha <= alpha_prev, by alternating between the convex
(u, e, p) block and the convex alpha block. A final (u, e, p) solve with the
last alpha makes the flow-rule certificates exact for the returned state.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import scipy.sparse.linalg as spla
from numpy.typing import NDArray

from geoplast.engine.damage import alpha_step as solve_alpha_block
from geoplast.engine.damage import DamageFunctional, check_damage_field, dissipation
from geoplast.engine.discretization import (
    Mesh,
    assemble_load,
    dirichlet_values,
    elastic_stiffness,
    internal_force,
    solve_elastic,
    stiffness_matrix,
    strain,
)
from geoplast.engine.drucker_prager import (
    CERTIFICATE_ATOL,
    DOMAIN_RTOL,
    DruckerPrager,
    LocalUpdateResult,
    kkt_residuals,
    return_map,
)
from geoplast.engine.tensors import SymTensor
from geoplast.models.errors import (
    DiagnosticError,
    EvolutionAborted,
    GeoplastError,
    PreconditionError,
    SolverError,
)
from geoplast.models.models import (
    EnergyLedger,
    Scenario,
    StateSnapshot,
    StepStatistics,
    Trajectory,
)
from geoplast.utils.logger_config import get_logger

logger = get_logger("evolution")

ARMIJO = 1e-4
MAX_BACKTRACKS = 40
TANGENT_REGULARIZATION = 1e-8
ROUNDOFF = 16 * np.finfo(float).eps
SWEEP_SLACK = 1e-11
MIN_CHUNK = 256

StepCallback = Callable[[StateSnapshot, int], None]


@dataclass
class UepResult:
    u: NDArray[np.float64]
    update: LocalUpdateResult
    e: SymTensor
    energy: float
    iterations: int
    residual: float


@dataclass
class _Candidate:
    u: NDArray[np.float64]
    alpha: NDArray[np.float64]
    uep: UepResult
    objective: float
    stats: StepStatistics


class IncrementalSolver:
    """Operators and block solvers for one scenario."""

    def __init__(self, scenario: Scenario, threads: Optional[int] = None) -> None:
        self.scenario = scenario
        self.mesh: Mesh = scenario.mesh
        self.hooke = scenario.material.hooke
        self.yield_surface: DruckerPrager = scenario.material.yield_surface
        self.law = scenario.material.damage
        self.settings = scenario.solver
        self.threads = max(1, int(threads if threads is not None else self.settings.threads))

        self.dirichlet_mask = self.mesh.dirichlet_mask
        self.free = self.mesh.free_dofs
        self.K_el = elastic_stiffness(self.mesh, self.hooke)
        self._K_el_ff = self.K_el[self.free][:, self.free].tocsc()
        self._elastic_factor = spla.splu(self._K_el_ff) if self.free.size else None
        self.energy_scale = self.yield_surface.k * self.mesh.measure

    def dual_norm(self, f: NDArray[np.float64]) -> float:
        """``sqrt(f_free . K_ff^-1 f_free)``, the elastic dual norm of a load vector."""
        ff = f[self.free]
        if ff.size == 0 or self._elastic_factor is None:
            return 0.0
        return float(np.sqrt(max(float(ff @ self._elastic_factor.solve(ff)), 0.0)))

    # -- element-level evaluation ------------------------------------------

    def element_c1(self, alpha: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.law.c1(self.mesh.averaging @ alpha)

    def local_update(
        self,
        eps: SymTensor,
        p_prev: SymTensor,
        c1: NDArray[np.float64],
        with_tangent: bool = False,
    ) -> LocalUpdateResult:
        n_el = self.mesh.n_elements
        if self.threads <= 1 or n_el < 2 * MIN_CHUNK:
            return return_map(eps, p_prev, c1, self.hooke, self.yield_surface, with_tangent)

        chunks = np.array_split(np.arange(n_el), min(self.threads, n_el // MIN_CHUNK))

        def run(idx: NDArray[np.int64]) -> LocalUpdateResult:
            return return_map(eps[idx], p_prev[idx], c1[idx], self.hooke, self.yield_surface, with_tangent)

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            parts = list(pool.map(run, chunks))

        def cat(tensors: List[SymTensor]) -> SymTensor:
            return SymTensor(eps.dim, np.concatenate([t.components for t in tensors]))

        return LocalUpdateResult(
            p_new=cat([r.p_new for r in parts]),
            delta_p=cat([r.delta_p for r in parts]),
            sigma=cat([r.sigma for r in parts]),
            eta=cat([r.eta for r in parts]),
            dissipation=np.concatenate([r.dissipation for r in parts]),
            regime_codes=np.concatenate([r.regime_codes for r in parts]),
            tangent=np.concatenate([r.tangent for r in parts]) if with_tangent else None,
        )

    # -- energies -----------------------------------------------------------

    def energy_terms(
        self,
        u: NDArray[np.float64],
        p: SymTensor,
        alpha: NDArray[np.float64],
        load: NDArray[np.float64],
    ) -> Tuple[float, float, float, float, float]:
        """Return ``(Q, D, grad, Qtilde, load_term)``."""
        vol = self.mesh.volumes
        e = strain(u, self.mesh) - p
        Q = float(vol @ self.hooke.energy_density(e))
        D = dissipation(alpha, self.mesh, self.law)
        grad = float(self.law.w_grad * alpha @ (self.mesh.laplacian @ alpha))
        Qtilde = float(vol @ (self.element_c1(alpha) * p.inner(p)))
        return Q, D, grad, Qtilde, float(load @ u)

    def stability_functional(
        self,
        u: NDArray[np.float64],
        p: SymTensor,
        alpha: NDArray[np.float64],
        load: NDArray[np.float64],
    ) -> float:
        Q, D, grad, Qtilde, load_term = self.energy_terms(u, p, alpha, load)
        return Q + D + grad + Qtilde - load_term

    def dissipation_increment(self, p_new: SymTensor, p_old: SymTensor) -> float:
        delta = p_new - p_old
        atol = DOMAIN_RTOL * (p_new.norm() + p_old.norm())
        inside = self.yield_surface.in_domain(delta, atol=atol)
        if not np.all(inside):
            bad = np.flatnonzero(~np.atleast_1d(inside))
            raise DiagnosticError(
                f"plastic increment leaves dom H on {bad.size} element(s), first {int(bad[0])}"
            )
        return float(self.mesh.volumes @ (self.yield_surface.apex * delta.trace()))

    def objective(
        self,
        u: NDArray[np.float64],
        p: SymTensor,
        alpha: NDArray[np.float64],
        p_prev: SymTensor,
        load: NDArray[np.float64],
    ) -> float:
        return self.stability_functional(u, p, alpha, load) + self.dissipation_increment(p, p_prev)

    # -- (u, e, p) block ----------------------------------------------------

    def _reduced(
        self,
        u: NDArray[np.float64],
        p_prev: SymTensor,
        c1: NDArray[np.float64],
        load: NDArray[np.float64],
        with_tangent: bool,
    ) -> Tuple[float, LocalUpdateResult]:
        eps = strain(u, self.mesh)
        upd = self.local_update(eps, p_prev, c1, with_tangent)
        e = eps - upd.p_new
        density = self.hooke.energy_density(e) + c1 * upd.p_new.inner(upd.p_new) + upd.dissipation
        return float(self.mesh.volumes @ density - load @ u), upd

    def _line_search(
        self,
        u: NDArray[np.float64],
        direction: NDArray[np.float64],
        slope: float,
        energy: float,
        p_prev: SymTensor,
        c1: NDArray[np.float64],
        load: NDArray[np.float64],
    ) -> Optional[Tuple[NDArray[np.float64], float]]:
        lam = 1.0
        roundoff = ROUNDOFF * (abs(energy) + self.energy_scale)
        for _ in range(MAX_BACKTRACKS):
            trial = u.copy()
            trial[self.free] += lam * direction
            trial_energy, _ = self._reduced(trial, p_prev, c1, load, with_tangent=False)
            if trial_energy <= energy + ARMIJO * lam * slope + roundoff:
                return trial, trial_energy
            lam *= 0.5
        return None

    def uep_step(
        self,
        alpha: NDArray[np.float64],
        u_start: NDArray[np.float64],
        p_prev: SymTensor,
        t: float,
        load: Optional[NDArray[np.float64]] = None,
    ) -> UepResult:
        """Minimize the reduced energy in u with alpha frozen.

        Newton on the free dofs with the algorithmic tangent, safeguarded by
        an Armijo search; when the Newton direction fails, a step in the
        elastic metric (a majorization of the reduced energy) is taken.
        """
        F = assemble_load(t, self.scenario.loading, self.mesh) if load is None else load
        lift = dirichlet_values(t, self.scenario.loading, self.mesh)
        u = np.asarray(u_start, dtype=float).copy()
        u[self.dirichlet_mask] = lift[self.dirichlet_mask]
        c1 = self.element_c1(alpha)

        energy, upd = self._reduced(u, p_prev, c1, F, with_tangent=True)
        residual = 0.0
        for iteration in range(self.settings.max_newton_iters + 1):
            f_int = internal_force(upd.sigma, self.mesh)
            g = (f_int - F)[self.free]
            residual = float(np.linalg.norm(g))
            force_scale = max(float(np.linalg.norm(F)), float(np.linalg.norm(f_int)))
            if residual <= self.settings.tol_uep * force_scale or self.free.size == 0:
                break
            if iteration == self.settings.max_newton_iters:
                raise SolverError(
                    "displacement block did not converge",
                    residual=residual / max(force_scale, 1e-300),
                    iterations=iteration,
                    stage="uep_step",
                )

            accepted = None
            K = stiffness_matrix(self.mesh, upd.tangent)[self.free][:, self.free]
            K = (K + TANGENT_REGULARIZATION * self._K_el_ff).tocsc()
            direction = np.atleast_1d(spla.spsolve(K, -g))
            slope = float(g @ direction)
            if np.all(np.isfinite(direction)) and slope < 0:
                accepted = self._line_search(u, direction, slope, energy, p_prev, c1, F)
            if accepted is None:
                logger.debug(f"newton direction rejected at iteration {iteration}, using elastic metric")
                direction = -self._elastic_factor.solve(g)
                accepted = self._line_search(u, direction, float(g @ direction), energy, p_prev, c1, F)
            if accepted is None:
                if residual <= 1e-6 * force_scale:
                    logger.warning(
                        f"uep line search stalled at relative residual {residual / force_scale:.3e}; "
                        "accepting roundoff-limited state"
                    )
                    break
                raise SolverError(
                    "line search failed in the displacement block",
                    residual=residual / max(force_scale, 1e-300),
                    iterations=iteration,
                    stage="uep_step",
                )
            u, _ = accepted
            energy, upd = self._reduced(u, p_prev, c1, F, with_tangent=True)

        logger.debug(f"uep_step t={t:.6g}: {iteration} iterations, |g|={residual:.3e}")
        e = strain(u, self.mesh) - upd.p_new
        return UepResult(u=u, update=upd, e=e, energy=energy, iterations=iteration, residual=residual)

    # -- time stepping ------------------------------------------------------

    def initial_state(self) -> StateSnapshot:
        """Elastic equilibrium at t = 0 with the initial damage and plastic strain frozen."""
        init = self.scenario.initial
        alpha0 = check_damage_field(init.alpha0, self.mesh.n_vertices)
        p0 = SymTensor(self.mesh.dim, np.asarray(init.p0, dtype=float))
        u0 = solve_elastic(self.mesh, self.hooke, 0.0, self.scenario.loading, p0)
        e0 = strain(u0, self.mesh) - p0
        sigma0 = self.hooke.apply(e0)
        F0 = assemble_load(0.0, self.scenario.loading, self.mesh)
        Q, D, grad, Qtilde, load_term = self.energy_terms(u0, p0, alpha0, F0)
        self.energy_scale = Q + self.yield_surface.k * self.mesh.measure
        ledger = EnergyLedger(Q=Q, D=D, grad=grad, Qtilde=Qtilde, load_term=load_term)
        return StateSnapshot(
            t=0.0, alpha=alpha0.copy(), u=u0, e=e0, p=p0, sigma=sigma0, energy=ledger
        )

    def _alternate(
        self,
        prev: StateSnapshot,
        t: float,
        u_start: NDArray[np.float64],
        alpha_start: NDArray[np.float64],
        load: NDArray[np.float64],
    ) -> _Candidate:
        """
        Alternate the (u, e, p) and alpha blocks until the pair is stationary.

        Every sweep starts with a converged (u, e, p) solve at the current
        alpha, so the block is stationary in (u, e, p). The sweep stops when
        the projected alpha gradient of that state is below
        ``tol_alpha + tol_altmin``.
        """
        s = self.settings
        alpha = alpha_start.copy()
        u = u_start
        phi_prev = self.objective(u, prev.p, alpha, prev.p, load)
        stats = StepStatistics()
        rel = 0.0
        stationarity = np.inf
        uep: Optional[UepResult] = None
        for sweep in range(1, s.max_sweeps + 1):
            uep = self.uep_step(alpha, u, prev.p, t, load)
            u = uep.u
            stats.newton_iterations += uep.iterations
            stats.sweeps = sweep
            functional = DamageFunctional(self.mesh, self.law, uep.update.p_new.inner(uep.update.p_new))
            stationarity = functional.residual(alpha, prev.alpha)
            if stationarity <= s.tol_alpha + s.tol_altmin:
                break
            ares = solve_alpha_block(
                prev.alpha,
                functional.p_squared,
                self.mesh,
                self.law,
                tol=s.tol_alpha,
                max_iters=s.max_alpha_iters,
                alpha_start=alpha,
            )
            alpha = ares.alpha
            stats.alpha_iterations += ares.iterations

            phi = self.objective(u, uep.update.p_new, alpha, prev.p, load)
            scale = max(abs(phi), self.energy_scale)
            if phi > phi_prev + SWEEP_SLACK * scale:
                raise SolverError(
                    f"alternating sweep increased the objective by {phi - phi_prev:.3e}",
                    residual=(phi - phi_prev) / scale,
                    iterations=sweep,
                    stage="incremental_step",
                )
            rel = (phi_prev - phi) / scale
            phi_prev = phi
            uep = None
        else:
            logger.warning(
                f"t={t:.6g}: {s.max_sweeps} sweeps without reaching stationarity "
                f"(alpha residual {stationarity:.3e}, last relative decrease {rel:.3e})"
            )

        polish = uep if uep is not None else self.uep_step(alpha, u, prev.p, t, load)
        if uep is None:
            stats.newton_iterations += polish.iterations
        stats.alpha_residual = float(stationarity)
        stats.uep_residual = polish.residual
        stats.relative_decrease = rel
        objective = self.objective(polish.u, polish.update.p_new, alpha, prev.p, load)
        stats.objective = objective
        return _Candidate(u=polish.u, alpha=alpha, uep=polish, objective=objective, stats=stats)

    def incremental_step(self, prev: StateSnapshot, t: float, step: int) -> StateSnapshot:
        """Advance from ``prev`` to time ``t`` (``step`` is the index of ``t``)."""
        s = self.settings
        loading = self.scenario.loading
        F = assemble_load(t, loading, self.mesh)
        F_prev = assemble_load(prev.t, loading, self.mesh)
        lift = dirichlet_values(t, loading, self.mesh)
        lift_prev = dirichlet_values(prev.t, loading, self.mesh)

        # Transported previous state: u with the new Dirichlet values, p and alpha kept.
        u0 = prev.u.copy()
        u0[self.dirichlet_mask] = lift[self.dirichlet_mask]
        warm = self.stability_functional(u0, prev.p, prev.alpha, F)

        best = self._alternate(prev, t, u0, prev.alpha, F)
        for start in range(1, s.multi_start + 1):
            rng = np.random.default_rng([s.seed, step, start])
            alpha_start = prev.alpha * (1.0 - rng.uniform(0.0, 0.5, size=prev.alpha.shape))
            candidate = self._alternate(prev, t, u0, alpha_start, F)
            if candidate.objective < best.objective:
                best = candidate
        best.stats.starts = 1 + s.multi_start

        scale = max(abs(warm), self.energy_scale)
        if best.objective > warm + SWEEP_SLACK * scale:
            raise SolverError(
                "incremental objective exceeds the transported warm start",
                residual=(best.objective - warm) / scale,
                iterations=best.stats.sweeps,
                stage="incremental_step",
            )

        upd = best.uep.update
        if __debug__:
            self._assert_certificates(upd)

        p = upd.p_new
        Q, D, grad, Qtilde, load_term = self.energy_terms(best.u, p, best.alpha, F)
        dw = lift - lift_prev
        f_int = internal_force(upd.sigma, self.mesh)
        f_int_prev = internal_force(prev.sigma, self.mesh)
        led = prev.energy
        ledger = EnergyLedger(
            Q=Q,
            D=D,
            grad=grad,
            Qtilde=Qtilde,
            VH_cum=led.VH_cum + self.dissipation_increment(p, prev.p),
            work_sigma_cum=led.work_sigma_cum + 0.5 * float((f_int_prev + f_int) @ dw),
            work_load_cum=led.work_load_cum
            + 0.5 * float((F - F_prev) @ (best.u + prev.u) + (F + F_prev) @ dw),
            load_term=load_term,
        )
        return StateSnapshot(
            t=float(t),
            alpha=best.alpha,
            u=best.u,
            e=best.uep.e,
            p=p,
            sigma=upd.sigma,
            energy=ledger,
            stats=best.stats,
        )

    def _assert_certificates(self, upd: LocalUpdateResult) -> None:
        flow, yld, cone = kkt_residuals(upd.delta_p, upd.eta, self.yield_surface)
        k = self.yield_surface.k
        stress_scale = k + float(np.max(upd.eta.norm(), initial=0.0))
        strain_scale = float(np.max(upd.delta_p.norm(), initial=0.0)) + 1e-300
        worst = max(
            float(np.max(yld, initial=0.0)) / stress_scale,
            float(np.max(flow, initial=0.0)) / (stress_scale * strain_scale),
            float(np.max(cone, initial=0.0)) / strain_scale,
        )
        if worst > CERTIFICATE_ATOL:
            raise DiagnosticError(f"return-map certificates violated (relative residual {worst:.3e})")

    def run(self, on_step: Optional[StepCallback] = None) -> Trajectory:
        trajectory = Trajectory(scenario_name=self.scenario.name)
        state = self.initial_state()
        trajectory.append(state)
        if on_step is not None:
            on_step(state, 0)
        e0 = state.energy.total

        times = self.scenario.times
        for step in range(1, len(times)):
            try:
                state = self.incremental_step(state, float(times[step]), step)
            except GeoplastError as exc:
                logger.error(f"step {step} (t={times[step]:.6g}) failed: {exc}")
                raise EvolutionAborted(
                    f"evolution aborted at step {step}", partial=trajectory, step=step, cause=exc
                ) from exc
            led = state.energy
            led.balance_residual = (led.total + led.VH_cum) - (
                e0 + led.work_sigma_cum - led.work_load_cum
            )
            trajectory.append(state)
            if on_step is not None:
                on_step(state, step)
            logger.info(
                f"step {step}/{len(times) - 1} t={state.t:.6g} sweeps={state.stats.sweeps} "
                f"Phi={state.stats.objective:.6e} min(alpha)={state.alpha.min():.6f} "
                f"VH={led.VH_cum:.6e} balance={led.balance_residual:.3e}"
            )
        return trajectory


# -- module-level operations ----------------------------------------------------


def total_energy(state: StateSnapshot, t: float, scenario: Scenario) -> EnergyLedger:
    """Energy components of ``state`` at time ``t`` (no cumulative terms)."""
    try:
        check_damage_field(state.alpha, scenario.mesh.n_vertices)
    except ValueError as exc:
        raise DiagnosticError(f"state violates the energy preconditions: {exc}") from exc
    if not np.all(np.isfinite(state.p.components)):
        raise DiagnosticError("state violates the energy preconditions: non-finite plastic strain")
    solver = IncrementalSolver(scenario)
    F = assemble_load(t, scenario.loading, scenario.mesh)
    Q, D, grad, Qtilde, load_term = solver.energy_terms(state.u, state.p, state.alpha, F)
    return EnergyLedger(Q=Q, D=D, grad=grad, Qtilde=Qtilde, load_term=load_term)


def dissipation_increment(p_new: SymTensor, p_old: SymTensor, mesh: Mesh, dp: DruckerPrager) -> float:
    """Sum over elements of ``|elem| * H(p_new - p_old)``; leaving dom H is a diagnostic error."""
    delta = p_new - p_old
    atol = DOMAIN_RTOL * (p_new.norm() + p_old.norm())
    values = dp.support(delta, atol=atol)
    if not np.all(dp.in_domain(delta, atol=atol)):
        raise DiagnosticError("plastic increment outside dom H")
    return float(mesh.volumes @ values)


def uep_step(
    alpha: NDArray[np.float64],
    prev: StateSnapshot,
    t: float,
    scenario: Scenario,
) -> UepResult:
    """(u, e, p) block at time t with alpha frozen, warm-started from ``prev``."""
    return IncrementalSolver(scenario).uep_step(alpha, prev.u, prev.p, t)


def incremental_step(prev: StateSnapshot, t: float, scenario: Scenario, step: int = 1) -> StateSnapshot:
    return IncrementalSolver(scenario).incremental_step(prev, t, step)


def run_evolution(
    scenario: Scenario,
    on_step: Optional[StepCallback] = None,
    threads: Optional[int] = None,
    check_initial: bool = True,
) -> Trajectory:
    """Run the full time grid of ``scenario``.

    The initial state must pass the sampled stability check; a failing step
    raises ``EvolutionAborted`` carrying the partial trajectory.
    """
    from geoplast.engine.verify import check_stability

    solver = IncrementalSolver(scenario, threads=threads)
    if check_initial:
        initial = solver.initial_state()
        record = check_stability(
            initial,
            scenario,
            n_samples=scenario.solver.initial_check_samples,
            seed=scenario.solver.seed,
        )
        if not record.passed:
            raise PreconditionError(
                f"initial state is not stable: sampled margin {record.margin:.3e} "
                f"below -{record.tolerance:.3e} ({record.worst_kind} competitor)"
            )
    logger.info(
        f"running '{scenario.name}': {scenario.time_steps} steps to t={scenario.horizon:g}, "
        f"{scenario.mesh.n_elements} elements"
    )
    return solver.run(on_step)
