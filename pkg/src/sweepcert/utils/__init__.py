"""Logging utilities for sweepcert."""

from .logging_config import configure_logging, get_logger
from .simple_logger import log_complete, log_start, log_update

__all__ = [
    "configure_logging",
    "get_logger",
    "log_start",
    "log_update",
    "log_complete",
]
