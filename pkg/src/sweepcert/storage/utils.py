"""Utility functions for report names."""

import re
from pathlib import Path

REPORT_EXTENSIONS = {".json", ".csv"}

# Report name sanitization regex
UNSAFE_CHARS = re.compile(r"[^\w\-.]")
MULTIPLE_DOTS = re.compile(r"\.{2,}")
LEADING_DOTS = re.compile(r"^\.+")


def validate_report_name(name: str) -> bool:
    """Reject traversal, absolute paths and unknown extensions.

    Args:
        name: Relative report name

    Returns:
        True if the name is safe, False otherwise
    """
    try:
        p = Path(name)
        if not name or p.is_absolute() or ".." in p.parts:
            return False
        if any(pattern in name for pattern in ["../", "..\\", "~/", "~\\"]):
            return False
        return p.suffix.lower() in REPORT_EXTENSIONS
    except Exception:
        return False


def sanitize_report_name(name: str) -> str:
    """Replace characters that are unsafe in file names.

    Args:
        name: Original report file name (no directories)

    Returns:
        Sanitized name
    """
    stem = Path(name).stem
    ext = Path(name).suffix

    stem = UNSAFE_CHARS.sub("_", stem)
    stem = MULTIPLE_DOTS.sub("_", stem)
    stem = LEADING_DOTS.sub("", stem)

    if len(stem) > 200:
        stem = stem[:200]
    if not stem:
        stem = "report"

    return f"{stem}{ext}"
