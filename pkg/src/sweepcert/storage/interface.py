"""Abstract report store interface for sweepcert."""

from abc import ABC, abstractmethod
from typing import List


class ReportStore(ABC):
    """Abstract store for report documents.

    Reports are small UTF-8 text documents (JSON or CSV) addressed by a
    relative name. Implementations must write each report atomically so a
    reader never observes a partial file.
    """

    @abstractmethod
    async def write_text(self, name: str, content: str) -> str:
        """Write a report and return its storage path.

        Args:
            name: Relative report name, e.g. "certificate.json"
            content: Report text

        Returns:
            Path of the written report

        Raises:
            StorageError: If the write fails
        """
        pass

    @abstractmethod
    async def read_text(self, name: str) -> str:
        """Read a report.

        Raises:
            FileNotFoundError: If the report doesn't exist
            StorageError: If the read fails
        """
        pass

    @abstractmethod
    async def exists(self, name: str) -> bool:
        """Check if a report exists."""
        pass

    @abstractmethod
    async def list_reports(self, suffix: str = "") -> List[str]:
        """Names of stored reports ending with ``suffix``, sorted."""
        pass


class StorageError(Exception):
    """Exception raised for storage-related errors."""
    pass
