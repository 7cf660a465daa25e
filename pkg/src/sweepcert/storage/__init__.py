"""Storage module for sweepcert.

This module provides the report store used to write certificate and
sweeping reports atomically.
"""

from .filesystem import FilesystemReportStore
from .interface import ReportStore, StorageError

__all__ = ["ReportStore", "FilesystemReportStore", "StorageError"]
