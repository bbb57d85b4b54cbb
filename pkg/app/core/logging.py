"""
Logging configuration for the Pareto MCTS toolkit.

This module sets up application-wide logging with a console handler and an optional rotating file handler.
"""
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

from app.core.config import settings

LOGGER_NAME = "pareto_mcts"


def setup_logging(level: Optional[str] = None, log_file: Optional[Path] = None) -> logging.Logger:
    """
    Set up logging for the toolkit.

    Configures the package loggers (`app.*`) and the named application logger with a console handler
    and, when a log file is configured, a rotating file handler. Calling it twice does not duplicate handlers.

    Args:
        level: Overrides settings.LOG_LEVEL.
        log_file: Overrides settings.LOG_FILE.
    Returns:
        logging.Logger: Configured application logger.
    """
    level = (level or settings.LOG_LEVEL).upper()
    log_file = log_file or settings.LOG_FILE
    formatter = logging.Formatter(settings.LOG_FORMAT)

    handlers = [logging.StreamHandler(sys.stdout)]
    if log_file is not None:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(RotatingFileHandler(
            log_file,
            maxBytes=10485760,  # 10MB
            backupCount=5
        ))
    for handler in handlers:
        handler.setFormatter(formatter)

    for name in (LOGGER_NAME, "app"):
        logger = logging.getLogger(name)
        logger.setLevel(level)
        for old in list(logger.handlers):
            logger.removeHandler(old)
        for handler in handlers:
            logger.addHandler(handler)
        logger.propagate = False

    return logging.getLogger(LOGGER_NAME)
