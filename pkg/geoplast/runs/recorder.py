"""Streaming writer for a single evolution run."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Dict, Optional

from geoplast.engine.storage import CSV_COLUMNS, LEDGER_FILE, ledger_row, write_trajectory
from geoplast.models.models import Scenario, StateSnapshot, Trajectory
from geoplast.utils.logger_config import get_logger

logger = get_logger("recorder")


class RunRecorder:
    """Manage the result directory of one run.

    Every finished step is appended to ``steps.jsonl`` and ``ledger.csv`` right
    away, so an aborted run still leaves the steps computed so far on disk.
    Nothing written here depends on the wall clock.
    """

    def __init__(self, base_dir: Path) -> None:
        self.base_dir = Path(base_dir)
        self.base_dir.mkdir(parents=True, exist_ok=True)
        self._steps_path = self.base_dir / "steps.jsonl"
        self._ledger_path = self.base_dir / LEDGER_FILE
        self._run_meta_path = self.base_dir / "run.json"
        self._scenario_path = self.base_dir / "scenario.json"

    def start_run(self, scenario: Scenario, metadata: Optional[Dict[str, Any]] = None) -> None:
        """Persist the effective scenario and the run metadata; truncate step logs."""
        self._scenario_path.write_text(
            json.dumps(scenario.document, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        payload = {"status": "running", "scenario": scenario.name, **(metadata or {})}
        self._write_meta(payload)
        self._steps_path.write_text("", encoding="utf-8")
        with self._ledger_path.open("w", encoding="utf-8", newline="") as f:
            csv.writer(f, lineterminator="\n").writerow(CSV_COLUMNS)

    def log_step(self, snapshot: StateSnapshot, step: int) -> None:
        record = {
            "step": step,
            "t": snapshot.t,
            "energy": snapshot.energy.to_dict(),
            "stats": snapshot.stats.to_dict(),
            "min_alpha": float(snapshot.alpha.min()),
            "max_tr_p": float(snapshot.p.trace().max()),
        }
        with self._steps_path.open("a", encoding="utf-8") as f:
            f.write(json.dumps(record) + "\n")
        with self._ledger_path.open("a", encoding="utf-8", newline="") as f:
            csv.writer(f, lineterminator="\n").writerow(ledger_row(step, snapshot))

    def finalize(
        self,
        status: str,
        trajectory: Optional[Trajectory] = None,
        mesh: Any = None,
        extra: Optional[Dict[str, Any]] = None,
    ) -> None:
        """Write the full trajectory (possibly partial) and close the metadata file."""
        if trajectory is not None:
            write_trajectory(trajectory, self.base_dir, mesh)
        payload: Dict[str, Any] = {}
        if self._run_meta_path.exists():
            payload = json.loads(self._run_meta_path.read_text(encoding="utf-8"))
        payload["status"] = status
        if trajectory is not None:
            payload["snapshots"] = len(trajectory)
        if extra:
            payload.update(extra)
        self._write_meta(payload)
        logger.info(f"run finished with status '{status}' in {self.base_dir}")

    def _write_meta(self, payload: Dict[str, Any]) -> None:
        self._run_meta_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
