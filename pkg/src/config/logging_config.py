"""
Logging setup for the pdmpc command line.

Console output carries the per-run progress lines; an optional rotating file
(LOG_FILE) keeps the per-step DEBUG detail of the planner and controller.
"""

import logging
import logging.handlers
from pathlib import Path
from typing import Optional

from .settings import LOG_BACKUP_COUNT, LOG_FILE, LOG_FORMAT, LOG_LEVEL, LOG_MAX_SIZE

STEP_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s'

# Libraries whose INFO output drowns the per-step lines
NOISY_LOGGERS = ("sqlalchemy.engine", "sqlalchemy.pool")


def _step_log_handler(log_file: Path) -> logging.Handler:
    log_file.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.handlers.RotatingFileHandler(
        log_file, maxBytes=LOG_MAX_SIZE, backupCount=LOG_BACKUP_COUNT, encoding="utf-8",
    )
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(STEP_FORMAT))
    return handler


def setup_logging(level: str = None, log_file: Optional[Path] = LOG_FILE) -> logging.Logger:
    """
    Configure the root logger once per process.

    Args:
        level: Console level name (defaults to LOG_LEVEL from settings)
        log_file: Rotating step log; None keeps console output only

    Returns:
        The root logger
    """
    root = logging.getLogger()
    console_level = getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO)

    if root.handlers:
        return root

    console = logging.StreamHandler()
    console.setLevel(console_level)
    console.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(console)

    if log_file:
        root.addHandler(_step_log_handler(Path(log_file)))
        root.setLevel(logging.DEBUG)
    else:
        root.setLevel(console_level)

    for name in NOISY_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)
    logging.getLogger(__name__).debug(f"Logging configured: console {logging.getLevelName(console_level)}, "
                                      f"step log {log_file or 'off'}")
    return root


def set_verbose(verbose: bool) -> None:
    """Switch the root logger and its console handlers to DEBUG."""
    if not verbose:
        return
    root = logging.getLogger()
    root.setLevel(logging.DEBUG)
    for handler in root.handlers:
        if not isinstance(handler, logging.handlers.RotatingFileHandler):
            handler.setLevel(logging.DEBUG)
