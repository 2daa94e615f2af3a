import logging
from pathlib import Path
from typing import Any, Dict

from ..utils import format_number
from .base_exporter import BaseExporter

logger = logging.getLogger(__name__)


class TransformSidecarExporter(BaseExporter):
    """Writes transform parameters as ``key = value`` lines next to the CSV output."""

    def export(self, data: Dict[str, Any], file_path: str) -> None:
        """Export transform parameters to a text file.

        Args:
            data: Flat dictionary, e.g. from ``Transform.summary()``.
            file_path: Path where the file should be written.

        Raises:
            ValueError: If data is empty.
            IOError: If file write fails.
        """
        if not data:
            raise ValueError("No transform parameters to export")

        lines = []
        for key, value in data.items():
            if value is None:
                text = "none"
            elif isinstance(value, float):
                text = format_number(value)
            else:
                text = str(value)
            lines.append(f"{key} = {text}")

        try:
            Path(file_path).parent.mkdir(parents=True, exist_ok=True)
            Path(file_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
            logger.info(f"Wrote transform parameters to {file_path}")
        except IOError as e:
            logger.error(f"Failed to write transform file {file_path}: {e}")
            raise
