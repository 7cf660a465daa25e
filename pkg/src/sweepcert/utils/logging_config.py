"""Centralized logging configuration for sweepcert."""

import logging
import sys
from typing import Optional


class ProgressFormatter(logging.Formatter):
    """Render progress-tagged records as short start/update/complete lines."""

    def format(self, record: logging.LogRecord) -> str:
        progress_type = getattr(record, "progress_type", None)
        module = record.name.split(".")[-1]
        if progress_type == "start":
            return f"▶ {module}: {record.getMessage()}"
        if progress_type == "update":
            return f"   · {record.getMessage()}"
        if progress_type == "complete":
            return f"✓ {module}: {record.getMessage()}"
        return super().format(record)


def configure_logging(
    level: str = "INFO",
    format: Optional[str] = None,
    quiet: bool = False,
    suppress_external: bool = True,
) -> None:
    """Configure logging for the application.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR)
        format: Custom format string, or None for default
        quiet: If True, only warnings and errors are shown
        suppress_external: If True, suppress noisy external library logs
    """
    # Default format: levelname | time | filename:lineno | message
    if format is None:
        format = "%(levelname)-5s | %(asctime)s | %(filename)s:%(lineno)d | %(message)s"

    handler = logging.StreamHandler(sys.stdout)
    handler.setFormatter(ProgressFormatter(format, datefmt="%H:%M:%S"))

    effective = "WARNING" if quiet else level.upper()
    logging.basicConfig(
        level=getattr(logging, effective),
        handlers=[handler],
        force=True,  # Reconfigure if already configured
    )

    if suppress_external:
        for name in ("asyncio", "aiofiles", "concurrent.futures"):
            logging.getLogger(name).setLevel(logging.WARNING)


def get_logger(name: str) -> logging.Logger:
    """Get a logger with the given name.

    Args:
        name: Logger name (usually __name__)

    Returns:
        Configured logger instance
    """
    return logging.getLogger(name)
