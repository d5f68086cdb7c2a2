"""
Scenario files: JSON parsing, validation and construction of ``Scenario``.

Validation collects every problem with its dotted path before raising, so a
broken file is reported in one pass.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from geoplast.engine.damage import DamageLaw
from geoplast.engine.discretization import (
    BoundaryData,
    LoadHistory,
    Mesh,
    PiecewiseLinear,
    SafeLoadField,
    build_mesh,
)
from geoplast.engine.drucker_prager import DruckerPrager
from geoplast.engine.tensors import HookeParams, n_components
from geoplast.models.errors import ScenarioValidationError
from geoplast.models.models import (
    BoundaryKind,
    InitialData,
    MaterialModel,
    MeshKind,
    Scenario,
    SolverSettings,
)
from geoplast.utils.config_manager import ConfigManager
from geoplast.utils.logger_config import get_logger

logger = get_logger("scenario_loader")

REQUIRED_SECTIONS = ("mesh", "material", "loading", "initial")
POSITIVE_MATERIAL = ("mu", "tau", "k", "c_bar")
NONNEGATIVE_MATERIAL = ("w_d", "w_grad", "d_shift")


def parse_scenario(
    path: Union[str, Path], config: Optional[ConfigManager] = None
) -> Scenario:
    """Read and validate a scenario file."""
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as f:
            document = json.load(f)
    except OSError as e:
        raise ScenarioValidationError([f"{path}: cannot read scenario file ({e})"]) from e
    except json.JSONDecodeError as e:
        raise ScenarioValidationError([f"{path}: invalid JSON ({e})"]) from e
    if not isinstance(document, dict):
        raise ScenarioValidationError([f"{path}: top level must be an object"])
    document.setdefault("name", path.stem)
    return build_scenario(document, config)


def set_dotted(document: Dict[str, Any], key: str, value: Any) -> Dict[str, Any]:
    """Copy of ``document`` with ``key`` (e.g. ``"material.tau"``) set to ``value``."""
    updated = copy.deepcopy(document)
    current = updated
    parts = key.split(".")
    for part in parts[:-1]:
        nxt = current.get(part)
        if not isinstance(nxt, dict):
            nxt = {}
            current[part] = nxt
        current = nxt
    current[parts[-1]] = value
    return updated


def parse_value(text: str) -> Any:
    """CLI override values are JSON when they parse as JSON, strings otherwise."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _number(section: Dict[str, Any], key: str, path: str, errors: List[str]) -> Optional[float]:
    if key not in section:
        errors.append(f"{path}.{key}: missing required field")
        return None
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
        errors.append(f"{path}.{key}: must be a finite number, got {value!r}")
        return None
    return float(value)


def _table(raw: Any, path: str, errors: List[str]) -> Optional[PiecewiseLinear]:
    if not isinstance(raw, dict) or "times" not in raw or "values" not in raw:
        errors.append(f"{path}: expected an object with 'times' and 'values'")
        return None
    try:
        times = np.asarray(raw["times"], dtype=float).reshape(-1)
        values = np.asarray(raw["values"], dtype=float)
    except (TypeError, ValueError):
        errors.append(f"{path}: times and values must be numeric")
        return None
    if times.size and np.any(np.diff(times) <= 0):
        errors.append(f"{path}.times: time table must be sorted (strictly increasing)")
        return None
    try:
        return PiecewiseLinear(times, values)
    except ValueError as e:
        errors.append(f"{path}: {e}")
        return None


def _material(raw: Dict[str, Any], dim: int, errors: List[str]) -> Optional[MaterialModel]:
    before = len(errors)
    values: Dict[str, Optional[float]] = {}
    for key in ("lambda",) + POSITIVE_MATERIAL:
        values[key] = _number(raw, key, "material", errors)
    for key in POSITIVE_MATERIAL:
        v = values[key]
        if v is not None and not v > 0:
            errors.append(f"material.{key}: must be > 0, got {v!r}")
    for key in NONNEGATIVE_MATERIAL:
        if key in raw:
            v = _number(raw, key, "material", errors)
            if v is not None and v < 0:
                errors.append(f"material.{key}: must be >= 0, got {v!r}")
            values[key] = v
    if "w_d" not in raw:
        errors.append("material.w_d: missing required field")
    if "alpha_cap" in raw:
        cap = _number(raw, "alpha_cap", "material", errors)
        if cap is not None and not 0.0 < cap < 1.0:
            errors.append(f"material.alpha_cap: must lie in (0, 1), got {cap!r}")
        values["alpha_cap"] = cap
    lam, mu = values["lambda"], values["mu"]
    if lam is not None and mu is not None and mu > 0 and not lam + 2.0 * mu / dim > 0:
        errors.append(f"material.lambda: lambda + 2 mu / {dim} must be > 0, got lambda={lam!r}")
    if len(errors) > before:
        return None

    damage_kwargs: Dict[str, float] = {"c_bar": values["c_bar"], "w_d": values["w_d"]}  # type: ignore[dict-item]
    for key in ("w_grad", "alpha_cap", "d_shift"):
        if values.get(key) is not None:
            damage_kwargs[key] = values[key]  # type: ignore[assignment]
    return MaterialModel(
        hooke=HookeParams(lam, mu, dim),  # type: ignore[arg-type]
        yield_surface=DruckerPrager(values["tau"], values["k"], dim),  # type: ignore[arg-type]
        damage=DamageLaw(**damage_kwargs),
    )


def _loading(raw: Dict[str, Any], mesh: Mesh, errors: List[str]) -> LoadHistory:
    history = LoadHistory()
    dirichlet_tags = set(mesh.tags_of_kind(BoundaryKind.DIRICHLET))
    neumann_tags = set(mesh.tags_of_kind(BoundaryKind.NEUMANN))

    for tag, entry in (raw.get("w") or {}).items():
        path = f"loading.w.{tag}"
        if tag not in dirichlet_tags:
            errors.append(f"{path}: '{tag}' is not a Dirichlet boundary tag")
            continue
        value = _table(entry, path, errors)
        gradient = None
        if isinstance(entry, dict) and entry.get("gradient") is not None:
            if mesh.kind != MeshKind.RECT:
                errors.append(f"{path}.gradient: affine data is only supported on rect meshes")
            gradient = _table(entry["gradient"], f"{path}.gradient", errors)
            if gradient is not None and gradient.value_shape != (2, 2):
                errors.append(f"{path}.gradient: values must be 2x2 matrices")
        if value is not None:
            history.dirichlet[tag] = BoundaryData(value, gradient)

    for tag, entry in (raw.get("g") or {}).items():
        path = f"loading.g.{tag}"
        if tag not in neumann_tags:
            errors.append(f"{path}: '{tag}' is not a Neumann boundary tag")
            continue
        table = _table(entry, path, errors)
        if table is not None:
            history.traction[tag] = table

    if raw.get("f") is not None:
        if mesh.kind == MeshKind.POINT:
            errors.append("loading.f: body forces are not defined on a point mesh")
        history.body_force = _table(raw["f"], "loading.f", errors)
    return history


def _initial(raw: Dict[str, Any], mesh: Mesh, errors: List[str]) -> Optional[InitialData]:
    alpha_raw = raw.get("alpha0")
    if alpha_raw is None:
        errors.append("initial.alpha0: missing required field")
        return None
    try:
        alpha0 = np.broadcast_to(np.asarray(alpha_raw, dtype=float), (mesh.n_vertices,)).copy()
    except (TypeError, ValueError):
        errors.append(f"initial.alpha0: expected a number or {mesh.n_vertices} nodal values")
        return None
    if np.any(alpha0 < 0) or np.any(alpha0 > 1) or not np.all(np.isfinite(alpha0)):
        errors.append("initial.alpha0: values must lie in [0, 1]")
        return None

    m = n_components(mesh.dim)
    p_raw = raw.get("p0")
    if p_raw is None:
        p0 = np.zeros((mesh.n_elements, m))
    else:
        try:
            p0 = np.broadcast_to(np.asarray(p_raw, dtype=float), (mesh.n_elements, m)).copy()
        except (TypeError, ValueError):
            errors.append(f"initial.p0: expected {m} components or one row per element")
            return None
    return InitialData(alpha0=alpha0, p0=p0)


def _safe_load(raw: Dict[str, Any], mesh: Mesh, errors: List[str]) -> Optional[SafeLoadField]:
    rho = _table(raw.get("rho"), "safe_load.rho", errors)
    tau0 = _number(raw, "tau0", "safe_load", errors)
    if tau0 is not None and not tau0 > 0:
        errors.append(f"safe_load.tau0: must be > 0, got {tau0!r}")
    if rho is None or tau0 is None:
        return None
    m = n_components(mesh.dim)
    if rho.value_shape not in ((m,), (mesh.n_elements, m)):
        errors.append(f"safe_load.rho: values must have {m} components (uniform) or one row per element")
        return None
    return SafeLoadField(rho, tau0)


def _solver(
    raw: Dict[str, Any], config: Optional[ConfigManager], errors: List[str]
) -> SolverSettings:
    merged: Dict[str, Any] = {}
    if config is not None:
        merged.update(config.get_section("solver"))
        merged["threads"] = int(config.get("runtime.threads", 1))
    merged.update(raw)
    try:
        settings = SolverSettings.from_dict(merged)
    except (TypeError, ValueError) as e:
        errors.append(f"solver: {e}")
        return SolverSettings()
    for key in ("max_sweeps", "max_newton_iters", "max_alpha_iters", "threads"):
        if getattr(settings, key) < 1:
            errors.append(f"solver.{key}: must be >= 1")
    if settings.multi_start < 0:
        errors.append("solver.multi_start: must be >= 0")
    for key in ("tol_uep", "tol_alpha", "tol_altmin"):
        if not getattr(settings, key) > 0:
            errors.append(f"solver.{key}: must be > 0")
    return settings


def build_scenario(document: Dict[str, Any], config: Optional[ConfigManager] = None) -> Scenario:
    """Validate a scenario document and build the ``Scenario``.

    Raises:
        ScenarioValidationError: listing every problem found.
    """
    errors: List[str] = []
    for section in REQUIRED_SECTIONS:
        if not isinstance(document.get(section), dict):
            errors.append(f"{section}: missing required section")
    if errors:
        raise ScenarioValidationError(errors)

    mesh: Optional[Mesh] = None
    try:
        mesh = build_mesh(document["mesh"])
    except ValueError as e:
        errors.extend(str(e).split("; "))

    dim = mesh.dim if mesh is not None else int(document["mesh"].get("dim", 3))
    material = _material(document["material"], dim if dim in (2, 3) else 3, errors)

    loading_raw = document["loading"]
    horizon = _number(loading_raw, "horizon", "loading", errors)
    if horizon is not None and not horizon > 0:
        errors.append(f"loading.horizon: must be > 0, got {horizon!r}")
    steps = loading_raw.get("time_steps")
    if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
        errors.append(f"loading.time_steps: must be a positive integer, got {steps!r}")

    solver = _solver(document.get("solver") or {}, config, errors)

    loading = initial = safe_load = None
    if mesh is not None:
        loading = _loading(loading_raw, mesh, errors)
        initial = _initial(document["initial"], mesh, errors)
        if document.get("safe_load") is not None:
            safe_load = _safe_load(document["safe_load"], mesh, errors)

    if errors:
        for e in errors:
            logger.debug(f"scenario validation: {e}")
        raise ScenarioValidationError(errors)

    name = str(document.get("name", "scenario"))
    logger.info(f"scenario '{name}' validated")
    return Scenario(
        name=name,
        mesh=mesh,  # type: ignore[arg-type]
        material=material,  # type: ignore[arg-type]
        loading=loading,  # type: ignore[arg-type]
        horizon=horizon,  # type: ignore[arg-type]
        time_steps=steps,  # type: ignore[arg-type]
        initial=initial,  # type: ignore[arg-type]
        solver=solver,
        safe_load=safe_load,
        description=str(document.get("description", "")),
        document=copy.deepcopy(document),
    )
