from __future__ import annotations

from pathlib import Path
from typing import Any, Callable, Dict

import pytest

from geoplast.engine.evolution import run_evolution
from geoplast.models.errors import PreconditionError
from geoplast.models.models import Trajectory
from geoplast.runs.plots import emit_plots
from geoplast.utils.scenario_loader import build_scenario, parse_scenario

GALLERY_DIR = Path(__file__).resolve().parents[2] / "config" / "scenarios"
FIGURES = ["stress_strain.svg", "dilatancy.svg", "energy.svg", "damage.svg"]


@pytest.fixture(scope="module")
def elastic_run() -> Any:
    scenario = parse_scenario(GALLERY_DIR / "elastic_2d.json")
    return scenario, run_evolution(scenario)


def test_four_figures_are_written(tmp_path: Path, elastic_run: Any) -> None:
    scenario, trajectory = elastic_run
    written = emit_plots(trajectory, tmp_path, scenario.mesh)
    assert [p.name for p in written] == FIGURES
    for path in written:
        assert path.parent == tmp_path / "plots"
        assert path.read_text(encoding="utf-8").lstrip().startswith("<?xml")


def test_figures_are_reproducible(tmp_path: Path, elastic_run: Any) -> None:
    scenario, trajectory = elastic_run
    first = emit_plots(trajectory, tmp_path / "a", scenario.mesh)
    second = emit_plots(trajectory, tmp_path / "b", scenario.mesh)
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes(), a.name


def test_single_snapshot_is_rejected(tmp_path: Path, make_point_document: Callable[..., Dict[str, Any]]) -> None:
    scenario = build_scenario(make_point_document(steps=1))
    trajectory = run_evolution(scenario)
    short = Trajectory(scenario_name=trajectory.scenario_name, snapshots=trajectory.snapshots[:1])
    with pytest.raises(PreconditionError):
        emit_plots(short, tmp_path, scenario.mesh)
    assert not (tmp_path / "plots").exists()
