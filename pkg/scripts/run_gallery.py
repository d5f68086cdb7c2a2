#!/usr/bin/env python
"""Run, verify and plot every bundled scenario under config/scenarios/."""

from __future__ import annotations

import argparse
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List

from geoplast.engine.storage import read_trajectory, write_report
from geoplast.engine.verify import summarize_trajectory, verify_trajectory
from geoplast.main import EXIT_OK, run_scenario
from geoplast.runs.plots import emit_plots
from geoplast.utils.config_manager import ConfigManager
from geoplast.utils.logger_config import get_logger, setup_logging
from geoplast.utils.scenario_loader import parse_scenario

logger = get_logger("run_gallery")

GALLERY_DIR = Path("config/scenarios")

COLUMNS = (
    ("scenario", 18),
    ("run", 8),
    ("verify", 10),
    ("alpha_up", 9),
    ("min_alpha", 10),
    ("non_dilat", 10),
    ("max_tr_p", 10),
    ("max_|res|", 10),
    ("res/budget", 10),
)


def run_gallery(out: Path, config: ConfigManager, samples: int) -> List[Dict[str, Any]]:
    rows: List[Dict[str, Any]] = []
    for path in sorted(GALLERY_DIR.glob("*.json")):
        scenario = parse_scenario(path, config)
        run_dir = out / scenario.name
        code = run_scenario(scenario, run_dir)
        row: Dict[str, Any] = {
            "scenario": scenario.name,
            "run": "ok" if code == EXIT_OK else f"exit {code}",
            "verify": "-",
        }
        if code == EXIT_OK:
            trajectory = read_trajectory(run_dir)
            report = verify_trajectory(
                trajectory,
                scenario,
                samples=samples,
                seed=int(config.get("verify.seed", 0)),
                threads=int(config.get("runtime.threads", 1)),
            )
            write_report(report, run_dir)
            emit_plots(trajectory, run_dir, scenario.mesh)
            row["verify"] = "PASS" if report.passed else f"FAIL ({len(report.failures)})"
            summary = summarize_trajectory(trajectory, scenario)
            row.update(
                {
                    "alpha_up": summary.damage_increases,
                    "min_alpha": f"{summary.final_min_alpha:.4f}",
                    "non_dilat": summary.dilatancy_violations,
                    "max_tr_p": f"{summary.final_max_tr_p:.3e}",
                    "max_|res|": f"{summary.max_energy_residual:.2e}",
                    "res/budget": f"{summary.energy_budget_used:.3f}",
                }
            )
            logger.info(f"{scenario.name}: {summary.to_dict()}")
        rows.append(row)
    return rows


def main() -> int:
    parser = argparse.ArgumentParser(description="Run the scenario gallery")
    parser.add_argument("-o", "--out", default="results/gallery", help="Parent result directory")
    parser.add_argument("--config", default="config/geoplast_config.json", help="Configuration file")
    parser.add_argument("--samples", type=int, default=200, help="Stability competitors per snapshot")
    args = parser.parse_args()

    config = ConfigManager(args.config)
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    setup_logging(
        level=config.get("log.level", "INFO"),
        log_file=Path(config.get("log.dir", "logs")) / f"gallery_{timestamp}.log",
    )

    rows = run_gallery(Path(args.out), config, args.samples)
    print(" ".join(f"{name:<{width}}" for name, width in COLUMNS))
    for row in rows:
        print(" ".join(f"{str(row.get(name, '-')):<{width}}" for name, width in COLUMNS))
    passed = all(
        r["run"] == "ok" and r["verify"] == "PASS" and r["alpha_up"] == 0 and r["non_dilat"] == 0
        for r in rows
    )
    return 0 if passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
