"""
Configuration management for geoplast.

Values come from built-in defaults, then an optional JSON file, then
``GEOPLAST_*`` environment variables. Scenario files and CLI flags are
applied on top of this by the callers.
"""

import copy
import json
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from geoplast.utils.logger_config import get_logger

logger = get_logger("config_manager")

DEFAULT_CONFIG_PATH = "config/geoplast_config.json"

ENV_MAPPINGS: Dict[str, Tuple[str, ...]] = {
    "GEOPLAST_THREADS": ("runtime", "threads"),
    "GEOPLAST_LOG_LEVEL": ("log", "level"),
    "GEOPLAST_LOG_DIR": ("log", "dir"),
    "GEOPLAST_LOG_ENABLE_COLORS": ("log", "enable_colors"),
    "GEOPLAST_SEED": ("solver", "seed"),
}


class ConfigManager:
    """Layered configuration with dotted-key access."""

    def __init__(self, config_path: Optional[str] = None, use_env: bool = True):
        self.config_path = config_path or DEFAULT_CONFIG_PATH
        self.use_env = use_env
        self._config: Dict[str, Any] = {}
        self._load_config()

    def _load_config(self) -> None:
        self._config = self._get_default_config()

        path = Path(self.config_path)
        if path.exists():
            try:
                with path.open("r", encoding="utf-8") as f:
                    self._merge_config(json.load(f))
                logger.debug(f"Loaded configuration from {path}")
            except (OSError, json.JSONDecodeError) as e:
                logger.warning(f"Failed to load config file {path}: {e}")

        if self.use_env:
            self._load_from_env()

    @staticmethod
    def _get_default_config() -> Dict[str, Any]:
        return {
            "log": {"level": "INFO", "dir": "logs", "enable_colors": True},
            "solver": {
                "tol_uep": 1e-10,
                "tol_alpha": 1e-10,
                "tol_altmin": 1e-10,
                "max_sweeps": 200,
                "max_newton_iters": 60,
                "max_alpha_iters": 5000,
                "multi_start": 0,
                "seed": 0,
                "initial_check_samples": 64,
            },
            "verify": {
                "samples": 1000,
                "seed": 0,
                "tol_stab_rel": 1e-8,
                "tol_certificate": 1e-8,
                "tol_energy_rel": 1e-8,
            },
            "runtime": {"threads": 1, "sweep_workers": 1},
        }

    def _merge_config(self, new_config: Dict[str, Any]) -> None:
        def merge_dict(target: Dict[str, Any], source: Dict[str, Any]) -> None:
            for key, value in source.items():
                if key in target and isinstance(target[key], dict) and isinstance(value, dict):
                    merge_dict(target[key], value)
                else:
                    target[key] = value

        merge_dict(self._config, new_config)

    def _load_from_env(self) -> None:
        for env_var, path in ENV_MAPPINGS.items():
            value = os.getenv(env_var)
            if value is not None:
                self._set_nested_value(path, self._parse_env_value(value))
                logger.debug(f"{env_var} overrides {'.'.join(path)}")

    def _set_nested_value(self, path: Tuple[str, ...], value: Any) -> None:
        current = self._config
        for key in path[:-1]:
            current = current.setdefault(key, {})
        current[path[-1]] = value

    @staticmethod
    def _parse_env_value(value: str) -> Any:
        lowered = value.lower()
        if lowered in ("true", "yes", "on"):
            return True
        if lowered in ("false", "no", "off"):
            return False
        try:
            return int(value)
        except ValueError:
            pass
        try:
            return float(value)
        except ValueError:
            return value

    def get(self, key: str, default: Any = None) -> Any:
        """Get a value by dotted key, e.g. ``"solver.tol_uep"``."""
        current: Any = self._config
        for k in key.split("."):
            if isinstance(current, dict) and k in current:
                current = current[k]
            else:
                return default
        return current

    def set(self, key: str, value: Any) -> None:
        keys = key.split(".")
        current = self._config
        for k in keys[:-1]:
            current = current.setdefault(k, {})
        current[keys[-1]] = value

    def get_section(self, section: str) -> Dict[str, Any]:
        return copy.deepcopy(self._config.get(section, {}))

    def to_dict(self) -> Dict[str, Any]:
        return copy.deepcopy(self._config)

    def save(self, path: Optional[str] = None) -> None:
        save_path = Path(path or self.config_path)
        save_path.parent.mkdir(parents=True, exist_ok=True)
        with save_path.open("w", encoding="utf-8") as f:
            json.dump(self._config, f, indent=2)
        logger.info(f"Configuration saved to {save_path}")


_global_config: Optional[ConfigManager] = None


def get_config(config_path: Optional[str] = None) -> ConfigManager:
    """Get or create the global configuration instance."""
    global _global_config
    if _global_config is None:
        _global_config = ConfigManager(config_path)
    return _global_config


def set_config(config_manager: Optional[ConfigManager]) -> None:
    global _global_config
    _global_config = config_manager
