from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Iterator, List

import pytest

from geoplast import main as cli
from geoplast.engine import evolution
from geoplast.models.errors import SolverError

GALLERY_DIR = Path(__file__).resolve().parents[2] / "config" / "scenarios"


@pytest.fixture(autouse=True)
def _release_log_handlers() -> Iterator[None]:
    yield
    for handler in logging.root.handlers[:]:
        logging.root.removeHandler(handler)
        handler.close()


def _main(tmp_path: Path, *args: str) -> int:
    common: List[str] = ["--config", str(tmp_path / "no-config.json"), "--log-dir", str(tmp_path / "logs")]
    return cli.main(common + list(args))


def test_run_then_verify(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    out = tmp_path / "hydro"
    code = _main(tmp_path, "run", str(GALLERY_DIR / "hydrostatic_0d.json"), "-o", str(out), "--steps", "4")
    assert code == cli.EXIT_OK
    for name in ("scenario.json", "run.json", "steps.jsonl", "ledger.csv", "trajectory.json"):
        assert (out / name).exists(), name
    meta = json.loads((out / "run.json").read_text(encoding="utf-8"))
    assert meta["status"] == "completed"
    assert meta["snapshots"] == 5
    assert len((out / "steps.jsonl").read_text(encoding="utf-8").splitlines()) == 4

    code = _main(tmp_path, "verify", str(out), "--samples", "50")
    assert code == cli.EXIT_OK
    assert "PASS" in capsys.readouterr().out
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert report["passed"] is True
    assert (out / "report.txt").exists()
    assert not list(out.glob("*.log")), "log files stay out of result directories"


def test_invalid_scenario_exits_with_validation_code(tmp_path: Path) -> None:
    document = json.loads((GALLERY_DIR / "hydrostatic_0d.json").read_text(encoding="utf-8"))
    document["material"]["k"] = -1.0
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    assert _main(tmp_path, "run", str(path), "-o", str(tmp_path / "out")) == cli.EXIT_VALIDATION
    assert not (tmp_path / "out").exists()


def test_sweep_writes_one_directory_per_value(tmp_path: Path) -> None:
    out = tmp_path / "sweep"
    code = _main(
        tmp_path,
        "sweep",
        str(GALLERY_DIR / "hydrostatic_0d.json"),
        "--param",
        "material.tau",
        "--values",
        "0.5,0.6",
        "-o",
        str(out),
        "--steps",
        "2",
    )
    assert code == cli.EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == ["material.tau=0.5", "material.tau=0.6"]
    stored = json.loads((out / "material.tau=0.5" / "scenario.json").read_text(encoding="utf-8"))
    assert stored["material"]["tau"] == 0.5
    assert stored["loading"]["time_steps"] == 2


def test_plot_command(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    out = tmp_path / "elastic"
    assert _main(tmp_path, "run", str(GALLERY_DIR / "elastic_2d.json"), "-o", str(out)) == cli.EXIT_OK
    assert _main(tmp_path, "plot", str(out)) == cli.EXIT_OK
    printed = capsys.readouterr().out.splitlines()
    assert len(printed) == 4
    assert (out / "plots" / "energy.svg").exists()


def test_solver_failure_keeps_partial_results(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    def failing(*args: Any, **kwargs: Any) -> Any:
        raise SolverError("injected failure", residual=1.0, iterations=1, stage="return_map")

    monkeypatch.setattr(evolution, "return_map", failing)
    out = tmp_path / "aborted"
    code = _main(tmp_path, "run", str(GALLERY_DIR / "triaxial_0d.json"), "-o", str(out), "--steps", "3")
    assert code == cli.EXIT_SOLVER
    meta = json.loads((out / "run.json").read_text(encoding="utf-8"))
    assert meta["status"] == "aborted"
    assert meta["failed_step"] == 1
    assert len((out / "ledger.csv").read_text(encoding="utf-8").splitlines()) == 2


def test_missing_result_directory(tmp_path: Path) -> None:
    assert _main(tmp_path, "verify", str(tmp_path / "nowhere")) == cli.EXIT_VALIDATION


@pytest.mark.parametrize("content", [None, "{truncated"])
def test_verify_with_broken_trajectory_exits_with_validation_code(tmp_path: Path, content: Any) -> None:
    out = tmp_path / "hydro"
    scenario = str(GALLERY_DIR / "hydrostatic_0d.json")
    assert _main(tmp_path, "run", scenario, "-o", str(out), "--steps", "2") == cli.EXIT_OK
    trajectory = out / "trajectory.json"
    if content is None:
        trajectory.unlink()
    else:
        trajectory.write_text(content, encoding="utf-8")
    assert _main(tmp_path, "verify", str(out), "--samples", "5") == cli.EXIT_VALIDATION
    assert _main(tmp_path, "plot", str(out)) == cli.EXIT_VALIDATION


def test_run_and_verify_are_byte_reproducible(tmp_path: Path) -> None:
    outputs, verdicts = [], []
    for name in ("first", "second"):
        out = tmp_path / name
        scenario = str(GALLERY_DIR / "triaxial_0d.json")
        assert _main(tmp_path, "run", scenario, "-o", str(out), "--steps", "30", "--seed", "7") == cli.EXIT_OK
        verdicts.append(_main(tmp_path, "verify", str(out), "--samples", "50", "--seed", "7"))
        outputs.append(out)
    assert verdicts[0] == verdicts[1]
    assert verdicts[0] in (cli.EXIT_OK, cli.EXIT_VERIFY_FAIL)
    first, second = outputs
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    expected = {"scenario.json", "run.json", "steps.jsonl", "ledger.csv", "trajectory.json"}
    expected |= {"report.json", "report.txt"}
    assert expected <= set(names), names
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), f"{name} differs between runs"
