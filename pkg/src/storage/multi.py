"""Fan-out of benchmark rows to the CSV report and optional copies."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from .csv_file import CsvStorage
from .excel import ExcelStorage
from .sqlite import SQLiteStorage

logger = logging.getLogger(__name__)


class MultiStorage:
    """Writes every row to the CSV report and, when configured, SQLite and Excel.

    The CSV sink is required: its failures propagate. Optional sinks that
    fail to open or write are logged and skipped.
    """

    def __init__(
        self,
        csv_path: Path,
        sqlite_path: Optional[Path] = None,
        excel_path: Optional[Path] = None,
    ) -> None:
        self.csv_storage = CsvStorage(csv_path)
        self.sqlite_storage: Optional[SQLiteStorage] = None
        self.excel_storage: Optional[ExcelStorage] = None

        if sqlite_path:
            try:
                self.sqlite_storage = SQLiteStorage(sqlite_path)
            except Exception as e:
                logger.warning(f"Failed to initialize SQLite storage: {e}")
        if excel_path:
            try:
                self.excel_storage = ExcelStorage(excel_path)
            except Exception as e:
                logger.warning(f"Failed to initialize Excel storage: {e}")

        self.active_backends = ["CSV"]
        if self.sqlite_storage:
            self.active_backends.append("SQLite")
        if self.excel_storage:
            self.active_backends.append("Excel")
        logger.info(
            f"MultiStorage initialized with backends: {', '.join(self.active_backends)}"
        )

    def append_row(self, data: Dict[str, Any]) -> None:
        if not data:
            raise ValueError("Data dictionary cannot be empty")

        self.csv_storage.append_row(data)
        stored = 1
        optional = (("SQLite", self.sqlite_storage), ("Excel", self.excel_storage))
        for name, backend in optional:
            if backend is None:
                continue
            try:
                backend.append_row(data)
                stored += 1
            except Exception as e:
                logger.warning(f"{name} storage failed: {e}")
        logger.debug(f"Row stored to {stored}/{len(self.active_backends)} backends")

    def get_records(self, limit: Optional[int] = None) -> List[Dict[str, Any]]:
        return self.csv_storage.get_records(limit)

    def get_backend_status(self) -> Dict[str, bool]:
        return {
            "csv": True,
            "sqlite": self.sqlite_storage is not None,
            "excel": self.excel_storage is not None,
        }

    def close(self) -> None:
        for name, backend in (
            ("CSV", self.csv_storage),
            ("SQLite", self.sqlite_storage),
            ("Excel", self.excel_storage),
        ):
            if backend is None:
                continue
            try:
                backend.close()
            except Exception as e:
                logger.error(f"Error closing {name} storage: {e}")
        logger.info("All storage backends closed")
