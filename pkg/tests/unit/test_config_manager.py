from __future__ import annotations

import json
from pathlib import Path

import pytest

from geoplast.utils.config_manager import ConfigManager


def test_defaults_without_file(tmp_path: Path) -> None:
    config = ConfigManager(str(tmp_path / "missing.json"), use_env=False)
    assert config.get("solver.tol_uep") == 1e-10
    assert config.get("verify.samples") == 1000
    assert config.get("runtime.threads") == 1
    assert config.get("log.dir") == "logs"


def test_file_values_merge_into_defaults(tmp_path: Path) -> None:
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"verify": {"samples": 50}}), encoding="utf-8")
    config = ConfigManager(str(path), use_env=False)
    assert config.get("verify.samples") == 50
    assert config.get("verify.tol_stab_rel") == 1e-8, "unlisted keys keep their defaults"


def test_invalid_file_falls_back_to_defaults(tmp_path: Path) -> None:
    path = tmp_path / "config.json"
    path.write_text("{", encoding="utf-8")
    assert ConfigManager(str(path), use_env=False).get("solver.max_sweeps") == 200


def test_environment_overrides_file(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"runtime": {"threads": 2}}), encoding="utf-8")
    monkeypatch.setenv("GEOPLAST_THREADS", "4")
    monkeypatch.setenv("GEOPLAST_LOG_ENABLE_COLORS", "false")
    config = ConfigManager(str(path))
    assert config.get("runtime.threads") == 4
    assert config.get("log.enable_colors") is False


def test_dotted_get_and_set(tmp_path: Path) -> None:
    config = ConfigManager(str(tmp_path / "missing.json"), use_env=False)
    assert config.get("solver.nope", "fallback") == "fallback"
    assert config.get("log.level.deeper") is None
    config.set("verify.samples", 10)
    config.set("extra.flag", True)
    assert config.get("verify.samples") == 10
    assert config.get("extra.flag") is True


def test_save_and_reload(tmp_path: Path) -> None:
    config = ConfigManager(str(tmp_path / "missing.json"), use_env=False)
    config.set("solver.seed", 7)
    target = tmp_path / "nested" / "saved.json"
    config.save(str(target))
    assert ConfigManager(str(target), use_env=False).get("solver.seed") == 7


def test_sections_are_copies(tmp_path: Path) -> None:
    config = ConfigManager(str(tmp_path / "missing.json"), use_env=False)
    section = config.get_section("solver")
    section["seed"] = 99
    assert config.get("solver.seed") == 0
    assert config.get_section("unknown") == {}
