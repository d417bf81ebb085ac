"""
Logging for the bolic toolkit.

Records go to stderr in color and to a daily file logs/app_<date>.log.
stdout is left to the JSON documents printed by the CLI. Every logger made
here shares the same two handlers, so batch worker threads write one file.
"""

import logging
import sys
import threading
from datetime import datetime
from pathlib import Path
from typing import List, Optional

import colorlog

from src.utils.config import get_settings


LOGS_DIR = Path("logs")

CONSOLE_FORMAT = "%(log_color)s%(levelname)-8s%(reset)s %(blue)s[%(name)s]%(reset)s %(message)s"
FILE_FORMAT = "%(asctime)s - %(name)s - %(threadName)s - %(levelname)s - %(message)s"
LEVEL_COLORS = {
    "DEBUG": "cyan",
    "INFO": "green",
    "WARNING": "yellow",
    "ERROR": "red",
    "CRITICAL": "red,bg_white",
}

_lock = threading.Lock()
_console: Optional[logging.Handler] = None
_file: Optional[logging.Handler] = None
_managed: List[logging.Logger] = []


def _level(level: str) -> int:
    return getattr(logging, level.upper())


def _console_handler() -> logging.Handler:
    global _console
    if _console is None:
        _console = colorlog.StreamHandler(sys.stderr)
        _console.setFormatter(
            colorlog.ColoredFormatter(CONSOLE_FORMAT, reset=True, log_colors=LEVEL_COLORS)
        )
    return _console


def _file_handler() -> Optional[logging.Handler]:
    """DEBUG-level handler on today's file; None if logs/ cannot be created."""
    global _file
    if _file is None:
        try:
            LOGS_DIR.mkdir(exist_ok=True)
        except OSError:
            return None
        path = LOGS_DIR / f"app_{datetime.now():%Y-%m-%d}.log"
        _file = logging.FileHandler(path, encoding="utf-8")
        _file.setLevel(logging.DEBUG)
        _file.setFormatter(logging.Formatter(FILE_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
    return _file


def setup_logger(
    name: str,
    level: str = "INFO",
    console: bool = True,
    to_file: bool = True,
) -> logging.Logger:
    """
    Attach the shared handlers to logger `name` and set its level.

    Calling it again for the same name only changes the level.
    """
    logger = logging.getLogger(name)
    with _lock:
        logger.setLevel(_level(level))
        if logger in _managed:
            return logger
        if console:
            logger.addHandler(_console_handler())
        if to_file:
            handler = _file_handler()
            if handler is not None:
                logger.addHandler(handler)
        _managed.append(logger)
    return logger


def get_logger(name: str, level: Optional[str] = None) -> logging.Logger:
    """
    Logger for a module, at BOLIC_LOG_LEVEL unless `level` is given.

    Args:
        name: Logger name (typically __name__ of the module)
        level: DEBUG, INFO, WARNING, ERROR or CRITICAL
    """
    if level is None:
        level = get_settings().log_level
    return setup_logger(name, level)


def set_level(level: str) -> None:
    """Re-level every logger made through get_logger (CLI --log-level)."""
    numeric = _level(level)
    with _lock:
        for logger in _managed:
            logger.setLevel(numeric)
