"""
Supporting utilities: logging, layered configuration and scenario loading.
"""

from .config_manager import ConfigManager, get_config, set_config
from .logger_config import ColoredFormatter, NoColorFormatter, get_logger, setup_logging

__all__ = [
    "ConfigManager",
    "get_config",
    "set_config",
    "ColoredFormatter",
    "NoColorFormatter",
    "get_logger",
    "setup_logging",
]
