"""
Command-line interface for geoplast.

    geoplast run <scenario.json> -o <dir> [--steps N] [--seed S]
    geoplast verify <dir> [--samples N] [--seed S]
    geoplast sweep <scenario.json> --param <dotted.path> --values a,b,c -o <dir>
    geoplast plot <dir>

Exit codes: 0 success, 1 validation or precondition error, 2 solver failure,
3 verification FAIL.
"""

import argparse
import json
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from geoplast.engine.evolution import run_evolution
from geoplast.engine.storage import read_trajectory, write_report
from geoplast.engine.verify import verify_trajectory
from geoplast.models.errors import (
    EvolutionAborted,
    GeoplastError,
    PreconditionError,
    ResultFileError,
    ScenarioValidationError,
    SolverError,
)
from geoplast.models.models import Scenario
from geoplast.runs.plots import emit_plots
from geoplast.runs.recorder import RunRecorder
from geoplast.utils.config_manager import DEFAULT_CONFIG_PATH, ConfigManager, set_config
from geoplast.utils.logger_config import get_logger, setup_logging
from geoplast.utils.scenario_loader import build_scenario, parse_value, set_dotted

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_VERIFY_FAIL = 3

logger = get_logger("main")


def setup_logging_from_config(config: ConfigManager, command: str) -> None:
    """Console logging plus a timestamped file in ``log.dir`` (never in a result directory)."""
    log_config = config.get_section("log")
    log_dir = Path(log_config.get("dir", "logs"))
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    setup_logging(
        level=log_config.get("level", "INFO"),
        log_file=log_dir / f"geoplast_{command}_{timestamp}.log",
        enable_colors=log_config.get("enable_colors", True),
    )


def _load_document(path: Path) -> Dict[str, Any]:
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ScenarioValidationError([f"{path}: {e}"]) from e
    if not isinstance(document, dict):
        raise ScenarioValidationError([f"{path}: top level must be an object"])
    document.setdefault("name", path.stem)
    return document


def _apply_run_overrides(document: Dict[str, Any], args: argparse.Namespace) -> Dict[str, Any]:
    if getattr(args, "steps", None) is not None:
        document = set_dotted(document, "loading.time_steps", args.steps)
    if getattr(args, "seed", None) is not None:
        document = set_dotted(document, "solver.seed", args.seed)
    return document


def run_scenario(scenario: Scenario, out_dir: Path) -> int:
    """Run one scenario into ``out_dir``; returns the exit code."""
    recorder = RunRecorder(out_dir)
    recorder.start_run(
        scenario,
        {
            "time_steps": scenario.time_steps,
            "horizon": scenario.horizon,
            "seed": scenario.solver.seed,
            "multi_start": scenario.solver.multi_start,
        },
    )
    try:
        trajectory = run_evolution(scenario, on_step=recorder.log_step)
    except EvolutionAborted as e:
        logger.error(f"{scenario.name}: {e}")
        recorder.finalize("aborted", e.partial, scenario.mesh, {"error": str(e), "failed_step": e.step})
        return EXIT_SOLVER
    except PreconditionError as e:
        logger.error(f"{scenario.name}: {e}")
        recorder.finalize("precondition_failed", extra={"error": str(e)})
        return EXIT_VALIDATION
    except GeoplastError as e:
        logger.error(f"{scenario.name}: {e}", exc_info=True)
        recorder.finalize("failed", extra={"error": str(e)})
        return EXIT_SOLVER
    recorder.finalize("completed", trajectory, scenario.mesh)
    return EXIT_OK


def _run_dir_scenario(run_dir: Path, config: ConfigManager) -> Scenario:
    return build_scenario(_load_document(run_dir / "scenario.json"), config)


def cmd_run(args: argparse.Namespace, config: ConfigManager) -> int:
    document = _apply_run_overrides(_load_document(Path(args.scenario)), args)
    scenario = build_scenario(document, config)
    return run_scenario(scenario, Path(args.out))


def cmd_verify(args: argparse.Namespace, config: ConfigManager) -> int:
    run_dir = Path(args.dir)
    scenario = _run_dir_scenario(run_dir, config)
    trajectory = read_trajectory(run_dir)
    verify_cfg = config.get_section("verify")
    report = verify_trajectory(
        trajectory,
        scenario,
        samples=args.samples if args.samples is not None else int(verify_cfg.get("samples", 1000)),
        seed=args.seed if args.seed is not None else int(verify_cfg.get("seed", 0)),
        tol_stab_rel=float(verify_cfg.get("tol_stab_rel", 1e-8)),
        tol_certificate=float(verify_cfg.get("tol_certificate", 1e-8)),
        tol_energy_rel=float(verify_cfg.get("tol_energy_rel", 1e-8)),
        threads=int(config.get("runtime.threads", 1)),
    )
    write_report(report, run_dir)
    print(f"{scenario.name}: {'PASS' if report.passed else 'FAIL'} ({len(report.failures)} failure(s))")
    return EXIT_OK if report.passed else EXIT_VERIFY_FAIL


def cmd_sweep(args: argparse.Namespace, config: ConfigManager) -> int:
    base = _apply_run_overrides(_load_document(Path(args.scenario)), args)
    out = Path(args.out)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ScenarioValidationError(["--values: at least one value is required"])

    variants: List[Scenario] = []
    for raw in values:
        document = set_dotted(base, args.param, parse_value(raw))
        document["name"] = f"{base['name']}[{args.param}={raw}]"
        variants.append(build_scenario(document, config))

    def run_variant(item: Any) -> int:
        raw, scenario = item
        return run_scenario(scenario, out / f"{args.param}={raw}")

    workers = max(1, int(config.get("runtime.sweep_workers", 1)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        codes = list(pool.map(run_variant, zip(values, variants)))
    for raw, code in zip(values, codes):
        logger.info(f"{args.param}={raw}: exit code {code}")
    return max(codes)


def cmd_plot(args: argparse.Namespace, config: ConfigManager) -> int:
    run_dir = Path(args.dir)
    scenario = _run_dir_scenario(run_dir, config)
    trajectory = read_trajectory(run_dir)
    for path in emit_plots(trajectory, run_dir, scenario.mesh):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geoplast",
        description="Incremental minimization for coupled Drucker-Prager plasticity and damage",
    )
    parser.add_argument("--config", default=DEFAULT_CONFIG_PATH, help="Path to configuration file")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Override log level",
    )
    parser.add_argument("--log-dir", help="Override log directory")
    parser.add_argument("--threads", type=int, help="Worker threads for element loops and sampling")

    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a scenario")
    run.add_argument("scenario", help="Scenario JSON file")
    run.add_argument("-o", "--out", required=True, help="Result directory")
    run.add_argument("--steps", type=int, help="Override loading.time_steps")
    run.add_argument("--seed", type=int, help="Override solver.seed")

    verify = sub.add_parser("verify", help="Verify a result directory")
    verify.add_argument("dir", help="Result directory written by 'run'")
    verify.add_argument("--samples", type=int, help="Stability competitors per snapshot")
    verify.add_argument("--seed", type=int, help="Sampling seed")

    sweep = sub.add_parser("sweep", help="Run a scenario for several values of one parameter")
    sweep.add_argument("scenario", help="Scenario JSON file")
    sweep.add_argument("--param", required=True, help="Dotted path, e.g. material.tau")
    sweep.add_argument("--values", required=True, help="Comma-separated values")
    sweep.add_argument("-o", "--out", required=True, help="Parent result directory")
    sweep.add_argument("--steps", type=int, help="Override loading.time_steps")
    sweep.add_argument("--seed", type=int, help="Override solver.seed")

    plot = sub.add_parser("plot", help="Emit SVG figures for a result directory")
    plot.add_argument("dir", help="Result directory written by 'run'")
    return parser


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep, "plot": cmd_plot}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    config = ConfigManager(args.config)
    set_config(config)
    if args.log_level:
        config.set("log.level", args.log_level)
    if args.log_dir:
        config.set("log.dir", args.log_dir)
    if args.threads:
        config.set("runtime.threads", args.threads)
    setup_logging_from_config(config, args.command)

    try:
        return COMMANDS[args.command](args, config)
    except ScenarioValidationError as e:
        for error in e.errors:
            logger.error(f"validation: {error}")
        return EXIT_VALIDATION
    except ResultFileError as e:
        logger.error(str(e))
        return EXIT_VALIDATION
    except PreconditionError as e:
        logger.error(str(e))
        return EXIT_VALIDATION
    except SolverError as e:
        logger.error(str(e), exc_info=True)
        return EXIT_SOLVER
    except GeoplastError as e:
        logger.error(str(e), exc_info=True)
        return EXIT_SOLVER
    except KeyboardInterrupt:
        logger.info("interrupted")
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
