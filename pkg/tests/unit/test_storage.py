from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Callable, Dict

import numpy as np
import pytest

from geoplast.engine.evolution import IncrementalSolver, run_evolution
from geoplast.engine.storage import (
    CSV_COLUMNS,
    LEDGER_FILE,
    TRAJECTORY_FILE,
    read_ledger,
    read_trajectory,
    report_text,
    write_report,
    write_trajectory,
)
from geoplast.models.errors import ResultFileError
from geoplast.models.models import (
    SafeLoadReport,
    StepVerification,
    Trajectory,
    VerificationReport,
)
from geoplast.utils.scenario_loader import build_scenario

DocumentFactory = Callable[..., Dict[str, Any]]


def _written_run(tmp_path: Path, document: Dict[str, Any]) -> Trajectory:
    scenario = build_scenario(document)
    trajectory = run_evolution(scenario)
    write_trajectory(trajectory, tmp_path, scenario.mesh)
    return trajectory


def test_initial_only_trajectory(tmp_path: Path, make_point_document: DocumentFactory) -> None:
    scenario = build_scenario(make_point_document())
    trajectory = Trajectory(scenario_name=scenario.name)
    trajectory.append(IncrementalSolver(scenario).initial_state())
    csv_path, json_path = write_trajectory(trajectory, tmp_path / "run", scenario.mesh)
    lines = csv_path.read_text(encoding="utf-8").splitlines()
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert len(lines) == 2
    assert json_path.name == TRAJECTORY_FILE
    assert len(read_trajectory(tmp_path / "run")) == 1


def test_ledger_has_one_row_per_snapshot(tmp_path: Path, gallery_document: Callable[[str], Dict[str, Any]]) -> None:
    document = gallery_document("triaxial_0d")
    document["loading"]["time_steps"] = 10
    _written_run(tmp_path, document)
    lines = (tmp_path / LEDGER_FILE).read_text(encoding="utf-8").splitlines()
    assert len(lines) == 12
    assert [row.split(",")[0] for row in lines[1:]] == [str(i) for i in range(11)]


def test_trajectory_reads_back_exactly(tmp_path: Path, gallery_document: Callable[[str], Dict[str, Any]]) -> None:
    document = gallery_document("triaxial_0d")
    document["loading"]["time_steps"] = 10
    trajectory = _written_run(tmp_path, document)
    restored = read_trajectory(tmp_path)
    assert restored.scenario_name == trajectory.scenario_name
    assert len(restored) == len(trajectory)
    for ours, theirs in zip(trajectory.snapshots, restored.snapshots):
        assert ours.t == theirs.t
        assert np.array_equal(ours.alpha, theirs.alpha)
        assert np.array_equal(ours.u, theirs.u)
        for name in ("e", "p", "sigma"):
            assert np.array_equal(getattr(ours, name).components, getattr(theirs, name).components), name
        assert ours.energy == theirs.energy
        assert ours.stats == theirs.stats


def test_ledger_reads_back_exactly(tmp_path: Path, gallery_document: Callable[[str], Dict[str, Any]]) -> None:
    document = gallery_document("triaxial_0d")
    document["loading"]["time_steps"] = 10
    trajectory = _written_run(tmp_path, document)
    times, ledger = read_ledger(tmp_path / LEDGER_FILE)
    assert np.array_equal(times, trajectory.times)
    assert ledger == trajectory.ledger()


def test_schema_mismatch_is_rejected(tmp_path: Path, make_point_document: DocumentFactory) -> None:
    _written_run(tmp_path, make_point_document(steps=2))
    path = tmp_path / TRAJECTORY_FILE
    data = json.loads(path.read_text(encoding="utf-8"))
    data["schema_version"] = 99
    path.write_text(json.dumps(data), encoding="utf-8")
    with pytest.raises(ResultFileError, match="schema version"):
        read_trajectory(tmp_path)


def test_ledger_without_energy_columns_is_rejected(tmp_path: Path) -> None:
    path = tmp_path / LEDGER_FILE
    path.write_text("step,t,Q\n0,0.0,0.0\n", encoding="utf-8")
    with pytest.raises(ResultFileError, match="missing ledger columns"):
        read_ledger(path)


@pytest.mark.parametrize("content", [None, "{not json", "[1, 2]", '{"schema_version": 1, "snapshots": []}'])
def test_unreadable_trajectory_is_a_result_file_error(tmp_path: Path, content: Any) -> None:
    if content is not None:
        (tmp_path / TRAJECTORY_FILE).write_text(content, encoding="utf-8")
    with pytest.raises(ResultFileError):
        read_trajectory(tmp_path)


def test_ledger_with_bad_numbers_is_rejected(tmp_path: Path) -> None:
    with pytest.raises(ResultFileError, match="cannot read ledger"):
        read_ledger(tmp_path / LEDGER_FILE)
    path = tmp_path / LEDGER_FILE
    path.write_text(",".join(CSV_COLUMNS) + "\n" + ",".join(["x"] * len(CSV_COLUMNS)) + "\n", encoding="utf-8")
    with pytest.raises(ResultFileError, match="malformed ledger row"):
        read_ledger(path)


def _report(failures: bool) -> VerificationReport:
    report = VerificationReport(scenario_name="demo", samples=10, seed=3)
    report.steps.append(
        StepVerification(
            step=0,
            t=0.0,
            stability_margin=0.0,
            stability_tolerance=1e-8,
            energy_residual=0.0,
            energy_slack=1e-8,
            flow_rule_residual=0.0,
            backstress_free_flow_residual=0.0,
            yield_residual=0.0,
            cone_residual=0.0,
            alpha_monotone=True,
        )
    )
    report.safe_load = SafeLoadReport(True, 0.1, 0.0, 0.0, 0.5, 0.2)
    report.notes.append("sampled")
    if failures:
        report.failures.append("step 0 (t=0): stability margin -1.000e-03 below -1.000e-08")
    return report


def test_report_text_lists_outcome_and_failures() -> None:
    passing = report_text(_report(failures=False))
    assert passing.startswith("verification of 'demo': PASS")
    assert "safe load: PASS" in passing
    assert "failures:" not in passing

    failing = report_text(_report(failures=True))
    assert failing.startswith("verification of 'demo': FAIL")
    assert "  - step 0 (t=0): stability margin" in failing


def test_write_report(tmp_path: Path) -> None:
    json_path, text_path = write_report(_report(failures=True), tmp_path)
    data = json.loads(json_path.read_text(encoding="utf-8"))
    assert data["passed"] is False
    assert data["steps"][0]["alpha_monotone"] is True
    assert data["safe_load"]["tau0"] == 0.2
    assert text_path.read_text(encoding="utf-8").startswith("verification of 'demo'")
