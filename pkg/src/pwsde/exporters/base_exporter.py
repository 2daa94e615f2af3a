from abc import ABC, abstractmethod
from typing import Dict, Any


class BaseExporter(ABC):
    """Abstract base class for experiment result exporters."""

    @abstractmethod
    def export(self, data: Dict[str, Any], file_path: str) -> None:
        """Export data to a file.

        Args:
            data: Dictionary produced by a report's ``to_dict`` or by the CLI.
            file_path: Path where the file should be written.
        """
        pass
