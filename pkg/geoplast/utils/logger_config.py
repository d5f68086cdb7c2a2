"""
Logging configuration for geoplast.

Console output is colored per level; file output is plain. Modules obtain
their logger through ``get_logger`` at import time and never configure
handlers themselves.
"""

import logging
import re
import sys
from pathlib import Path
from typing import Optional, Union

BASE_FORMAT = (
    "%(asctime)s.%(msecs)03d | %(levelname)-8s | "
    "%(filename)s:%(lineno)d - %(funcName)s - %(message)s"
)
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class ColoredFormatter(logging.Formatter):
    """Formatter that colors the level name and message on the console."""

    COLORS = {
        "DEBUG": "\033[32m",
        "INFO": "\033[36m",
        "WARNING": "\033[33m",
        "ERROR": "\033[31m",
        "CRITICAL": "\033[41m\033[97m",
        "RESET": "\033[0m",
    }

    ANSI_ESCAPE = re.compile(r"\x1B(?:[@-Z\\-_]|\[[0-?]*[ -/]*[@-~])")

    def format(self, record: logging.LogRecord) -> str:
        color = self.COLORS.get(record.levelname, "")
        reset = self.COLORS["RESET"]

        original_levelname = record.levelname
        original_msg = record.msg
        record.levelname = f"{color}{original_levelname}{reset}"
        record.msg = f"{color}{original_msg}{reset}"
        try:
            return super().format(record)
        finally:
            record.levelname = original_levelname
            record.msg = original_msg

    def format_without_color(self, record: logging.LogRecord) -> str:
        return self.ANSI_ESCAPE.sub("", super().format(record))


class NoColorFormatter(ColoredFormatter):
    """Formatter without colors, used for files and non-tty consoles."""

    def format(self, record: logging.LogRecord) -> str:
        return self.format_without_color(record)


def setup_logging(
    level: str = "INFO",
    log_file: Optional[Union[str, Path]] = None,
    enable_colors: bool = True,
) -> None:
    """
    Configure the root logger.

    Args:
        level: Console level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional log file; it records every level
        enable_colors: Whether to color console output
    """
    for handler in logging.root.handlers[:]:
        logging.root.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(getattr(logging, level.upper()))
    formatter_cls = ColoredFormatter if enable_colors else NoColorFormatter
    console_handler.setFormatter(formatter_cls(BASE_FORMAT, datefmt=DATE_FORMAT))
    logging.root.addHandler(console_handler)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, mode="w", encoding="utf-8")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(NoColorFormatter(BASE_FORMAT, datefmt=DATE_FORMAT))
        logging.root.addHandler(file_handler)

    logging.root.setLevel(logging.DEBUG)
    # matplotlib's font manager is chatty at DEBUG
    logging.getLogger("matplotlib").setLevel(logging.WARNING)


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


# Default setup when module is imported
if not logging.root.handlers:
    setup_logging(level="WARNING")
