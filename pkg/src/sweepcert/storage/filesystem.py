"""Filesystem report store implementation."""

import logging
from pathlib import Path
from typing import List

import aiofiles
import aiofiles.os

from .interface import ReportStore, StorageError
from .utils import sanitize_report_name, validate_report_name


logger = logging.getLogger(__name__)


class FilesystemReportStore(ReportStore):
    """Report store rooted at a local directory.

    Every write goes to ``<name>.tmp`` first and is renamed into place, so
    reports appear atomically.
    """

    def __init__(self, base_path: str):
        """Initialize the store.

        Args:
            base_path: Directory that receives the reports (created if missing)
        """
        self.base_path = Path(base_path).resolve()
        self.base_path.mkdir(parents=True, exist_ok=True)

    def _get_absolute_path(self, name: str) -> Path:
        """Convert a report name to an absolute path inside the store.

        Raises:
            StorageError: If the name is invalid or escapes the store
        """
        if not validate_report_name(name):
            raise StorageError(f"Invalid report name: {name}")

        abs_path = self.base_path / name
        try:
            abs_path.resolve().relative_to(self.base_path)
        except ValueError:
            raise StorageError(f"Path escapes report directory: {name}")
        return abs_path

    async def write_text(self, name: str, content: str) -> str:
        parts = Path(name).parts
        if parts:
            name = str(Path(*parts[:-1], sanitize_report_name(parts[-1])))
        abs_path = self._get_absolute_path(name)
        temp_path = abs_path.with_suffix(abs_path.suffix + ".tmp")

        try:
            abs_path.parent.mkdir(parents=True, exist_ok=True)

            # newline="" keeps line endings byte-identical across platforms
            async with aiofiles.open(temp_path, "w", encoding="utf-8", newline="") as f:
                await f.write(content)

            await aiofiles.os.rename(temp_path, abs_path)
            logger.debug(f"Wrote report {abs_path}")
            return str(abs_path)

        except Exception as e:
            if temp_path.exists():
                temp_path.unlink()
            raise StorageError(f"Failed to write report {name}: {e}") from e

    async def read_text(self, name: str) -> str:
        abs_path = self._get_absolute_path(name)
        if not abs_path.exists():
            raise FileNotFoundError(f"Report not found: {name}")
        try:
            async with aiofiles.open(abs_path, "r", encoding="utf-8", newline="") as f:
                return await f.read()
        except Exception as e:
            raise StorageError(f"Failed to read report {name}: {e}") from e

    async def exists(self, name: str) -> bool:
        try:
            abs_path = self._get_absolute_path(name)
        except StorageError:
            return False
        return abs_path.exists()

    async def list_reports(self, suffix: str = "") -> List[str]:
        names = [
            str(path.relative_to(self.base_path))
            for path in self.base_path.rglob("*")
            if path.is_file()
            and path.suffix.lower() in {".json", ".csv"}
            and path.name.endswith(suffix)
        ]
        return sorted(names)
