from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import pytest

from geoplast.engine.evolution import run_evolution
from geoplast.models.models import Scenario, Trajectory
from geoplast.utils.scenario_loader import build_scenario, set_dotted

GALLERY_DIR = Path(__file__).resolve().parents[2] / "config" / "scenarios"

MATERIAL = {"lambda": 40.0, "mu": 40.0, "tau": 0.6, "k": 1.0, "c_bar": 2.0, "w_d": 0.02}
POINT_COMPONENTS = {2: ("xx", "yy", "xy"), 3: ("xx", "yy", "zz", "yz", "xz", "xy")}


def load_gallery(name: str) -> Dict[str, Any]:
    return json.loads((GALLERY_DIR / f"{name}.json").read_text(encoding="utf-8"))


def point_document(
    dim: int = 3,
    alpha0: float = 0.9,
    steps: int = 4,
    material: Optional[Dict[str, Any]] = None,
    neumann: Tuple[str, ...] = (),
) -> Dict[str, Any]:
    """Material point with every component held at zero unless listed in ``neumann``."""
    tags = {
        name: "neumann" if name in neumann else "dirichlet" for name in POINT_COMPONENTS[dim]
    }
    return {
        "name": "point",
        "mesh": {"kind": "point", "dim": dim, "boundary_tags": tags},
        "material": {**MATERIAL, **(material or {})},
        "loading": {"horizon": 1.0, "time_steps": steps},
        "initial": {"alpha0": alpha0},
    }


@pytest.fixture
def gallery_document() -> Callable[[str], Dict[str, Any]]:
    return load_gallery


@pytest.fixture
def make_point_document() -> Callable[..., Dict[str, Any]]:
    return point_document


def gallery_scenario(name: str, steps: int) -> Scenario:
    document = set_dotted(load_gallery(name), "loading.time_steps", steps)
    return build_scenario(copy.deepcopy(document))


@pytest.fixture(scope="session")
def evolved() -> Callable[[str, int], Tuple[Scenario, Trajectory]]:
    """Gallery scenario run at a given step count, cached for the session."""
    cache: Dict[Tuple[str, int], Tuple[Scenario, Trajectory]] = {}

    def run(name: str, steps: int) -> Tuple[Scenario, Trajectory]:
        if (name, steps) not in cache:
            scenario = gallery_scenario(name, steps)
            cache[name, steps] = (scenario, run_evolution(scenario))
        return cache[name, steps]

    return run


@pytest.fixture(scope="session")
def triaxial_run(evolved: Callable[[str, int], Tuple[Scenario, Trajectory]]) -> Tuple[Scenario, Trajectory]:
    return evolved("triaxial_0d", 100)


@pytest.fixture(scope="session")
def triaxial_fine_run(evolved: Callable[[str, int], Tuple[Scenario, Trajectory]]) -> Tuple[Scenario, Trajectory]:
    return evolved("triaxial_0d", 200)


@pytest.fixture(scope="session")
def hydrostatic_run() -> Tuple[Scenario, Trajectory]:
    scenario = build_scenario(load_gallery("hydrostatic_0d"))
    return scenario, run_evolution(scenario)
