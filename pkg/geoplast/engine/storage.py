"""
Result-directory persistence.

A run directory holds ``ledger.csv`` (one row per snapshot), ``trajectory.json``
(full fields per snapshot) and, after verification, ``report.json`` and
``report.txt``. Floats are written in shortest round-trip form, so reading a
file back reproduces the written values bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from geoplast.engine.tensors import SymTensor
from geoplast.models.errors import DiagnosticError, ResultFileError
from geoplast.models.models import (
    LEDGER_COLUMNS,
    EnergyLedger,
    StateSnapshot,
    StepStatistics,
    Trajectory,
    VerificationReport,
)
from geoplast.utils.logger_config import get_logger

logger = get_logger("storage")

SCHEMA_VERSION = 1
LEDGER_FILE = "ledger.csv"
TRAJECTORY_FILE = "trajectory.json"
REPORT_JSON = "report.json"
REPORT_TEXT = "report.txt"
STAT_COLUMNS = ("sweeps", "newton_iterations", "alpha_iterations", "uep_residual", "alpha_residual")
CSV_COLUMNS = ("step", "t") + LEDGER_COLUMNS + STAT_COLUMNS

PathLike = Union[str, Path]


def _fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def ledger_row(step: int, snapshot: StateSnapshot) -> List[str]:
    led = snapshot.energy.to_dict()
    stats = snapshot.stats.to_dict()
    return (
        [_fmt(step), _fmt(snapshot.t)]
        + [_fmt(led[c]) for c in LEDGER_COLUMNS]
        + [_fmt(stats[c]) for c in STAT_COLUMNS]
    )


def ledger_csv(trajectory: Trajectory) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for i, snap in enumerate(trajectory.snapshots):
        writer.writerow(ledger_row(i, snap))
    return buffer.getvalue()


def _snapshot_to_dict(snapshot: StateSnapshot) -> Dict[str, Any]:
    return {
        "t": snapshot.t,
        "alpha": snapshot.alpha.tolist(),
        "u": snapshot.u.tolist(),
        "e": snapshot.e.components.tolist(),
        "p": snapshot.p.components.tolist(),
        "sigma": snapshot.sigma.components.tolist(),
        "energy": snapshot.energy.to_dict(),
        "stats": snapshot.stats.to_dict(),
    }


def trajectory_to_dict(trajectory: Trajectory, mesh: Any = None) -> Dict[str, Any]:
    dim = trajectory.snapshots[0].e.dim if trajectory.snapshots else None
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": trajectory.scenario_name,
        "dim": dim,
        "mesh": mesh.to_dict() if mesh is not None else None,
        "snapshots": [_snapshot_to_dict(s) for s in trajectory.snapshots],
    }


def write_trajectory(trajectory: Trajectory, out_dir: PathLike, mesh: Any = None) -> Tuple[Path, Path]:
    """Write ``ledger.csv`` and ``trajectory.json``; returns both paths."""
    out = Path(out_dir)
    csv_path = out / LEDGER_FILE
    json_path = out / TRAJECTORY_FILE
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path.write_text(ledger_csv(trajectory), encoding="utf-8")
        json_path.write_text(
            json.dumps(trajectory_to_dict(trajectory, mesh), indent=1, allow_nan=True) + "\n",
            encoding="utf-8",
        )
    except OSError as e:
        raise OSError(f"cannot write trajectory to {out}: {e}") from e
    logger.info(f"wrote {len(trajectory)} snapshots to {out}")
    return csv_path, json_path


def read_ledger(path: PathLike) -> Tuple[np.ndarray, List[EnergyLedger]]:
    """Times and ledger entries of a ``ledger.csv`` file (or its run directory)."""
    csv_path = Path(path)
    if csv_path.is_dir():
        csv_path = csv_path / LEDGER_FILE
    try:
        with csv_path.open("r", encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
    except (OSError, UnicodeDecodeError, csv.Error) as e:
        raise ResultFileError(f"{csv_path}: cannot read ledger ({e})") from e
    missing = [c for c in ("t",) + LEDGER_COLUMNS if rows and c not in rows[0]]
    if missing:
        raise ResultFileError(f"{csv_path}: missing ledger columns {', '.join(missing)}")
    try:
        times = np.array([float(r["t"]) for r in rows])
        return times, [EnergyLedger.from_dict(r) for r in rows]
    except (DiagnosticError, TypeError, ValueError) as e:
        raise ResultFileError(f"{csv_path}: malformed ledger row ({e})") from e


def read_trajectory(path: PathLike) -> Trajectory:
    """Rebuild a trajectory from ``trajectory.json`` (or its run directory)."""
    json_path = Path(path)
    if json_path.is_dir():
        json_path = json_path / TRAJECTORY_FILE
    try:
        data = json.loads(json_path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ResultFileError(f"{json_path}: cannot read trajectory ({e})") from e
    if not isinstance(data, dict):
        raise ResultFileError(f"{json_path}: expected a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ResultFileError(f"{json_path}: unsupported schema version {version!r}")
    try:
        dim = int(data["dim"]) if data.get("dim") is not None else 3
        trajectory = Trajectory(scenario_name=data["scenario"])
        for raw in data["snapshots"]:
            trajectory.append(
                StateSnapshot(
                    t=float(raw["t"]),
                    alpha=np.asarray(raw["alpha"], dtype=float),
                    u=np.asarray(raw["u"], dtype=float),
                    e=SymTensor(dim, np.asarray(raw["e"], dtype=float)),
                    p=SymTensor(dim, np.asarray(raw["p"], dtype=float)),
                    sigma=SymTensor(dim, np.asarray(raw["sigma"], dtype=float)),
                    energy=EnergyLedger.from_dict(raw["energy"]),
                    stats=StepStatistics(**raw.get("stats", {})),
                )
            )
    except (DiagnosticError, KeyError, TypeError, ValueError) as e:
        raise ResultFileError(f"{json_path}: malformed trajectory ({e!r})") from e
    return trajectory


def report_text(report: VerificationReport) -> str:
    lines = [
        f"verification of '{report.scenario_name}': {'PASS' if report.passed else 'FAIL'}",
        f"samples per snapshot: {report.samples}, seed: {report.seed}",
        "",
        f"{'step':>5} {'t':>12} {'stab.margin':>12} {'energy.res':>12} {'slack':>12} "
        f"{'flow':>10} {'yield':>10} {'cone':>10} {'alpha.mono':>10}",
    ]
    for s in report.steps:
        lines.append(
            f"{s.step:>5d} {s.t:>12.6g} {s.stability_margin:>12.3e} {s.energy_residual:>12.3e} "
            f"{s.energy_slack:>12.3e} {s.flow_rule_residual:>10.2e} {s.yield_residual:>10.2e} "
            f"{s.cone_residual:>10.2e} {str(s.alpha_monotone):>10}"
        )
    if report.safe_load is not None:
        sl = report.safe_load
        lines += [
            "",
            f"safe load: {'PASS' if sl.passed else 'FAIL'} (inclusion margin {sl.inclusion_margin:.3e}, "
            f"equilibrium {sl.equilibrium_residual:.3e}, ibp {sl.ibp_residual:.3e}, "
            f"C_rho {sl.c_rho:.6g}, tau0 {sl.tau0:.6g})",
        ]
    if report.failures:
        lines += ["", "failures:"] + [f"  - {f}" for f in report.failures]
    if report.notes:
        lines += ["", "notes:"] + [f"  - {n}" for n in report.notes]
    return "\n".join(lines) + "\n"


def write_report(report: VerificationReport, out_dir: PathLike) -> Tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / REPORT_JSON
    text_path = out / REPORT_TEXT
    json_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    text_path.write_text(report_text(report), encoding="utf-8")
    logger.info(f"verification report written to {json_path}")
    return json_path, text_path
