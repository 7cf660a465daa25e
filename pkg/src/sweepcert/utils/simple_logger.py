"""Progress logging helpers for long-running experiments."""

import logging


def _emit(logger: logging.Logger, message: str, progress_type: str) -> None:
    if not logger.isEnabledFor(logging.INFO):
        return
    record = logger.makeRecord(
        logger.name, logging.INFO, "", 0, message, (), None
    )
    record.progress_type = progress_type
    logger.handle(record)


def log_start(logger: logging.Logger, message: str) -> None:
    """Log the start of a task."""
    _emit(logger, message, "start")


def log_update(logger: logging.Logger, message: str) -> None:
    """Log a progress update."""
    _emit(logger, message, "update")


def log_complete(logger: logging.Logger, message: str) -> None:
    """Log task completion."""
    _emit(logger, message, "complete")
