"""Sinks for benchmark results.

Every backend stores one row per ``(family, leaves, relation)`` measurement.
The CSV file is the primary sink; SQLite and Excel copies are optional.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional, Protocol

# Columns of the primary CSV report, in order.
CSV_COLUMNS = [
    "family",
    "leaves",
    "relation",
    "millis",
    "states_lhs",
    "states_rhs",
    "verdict",
]

# Secondary sinks also keep the minimised sizes, the repetition count and
# the time spent in the check alone.
RESULT_COLUMNS = CSV_COLUMNS + [
    "states_lhs_min",
    "states_rhs_min",
    "repetitions",
    "check_millis",
]


class StorageProtocol(Protocol):
    """Interface shared by all result backends."""

    def append_row(self, data: Dict[str, Any]) -> None:
        """Append one benchmark row.

        Args:
            data: Mapping with the keys of ``RESULT_COLUMNS``; keys missing
                from the backend's columns are ignored.

        Raises:
            ValueError: If data is empty.
        """
        ...

    def get_records(self, limit: Optional[int] = None) -> List[Dict[str, Any]]:
        """Return stored rows in insertion order, at most ``limit`` of them."""
        ...

    def close(self) -> None:
        ...


from .csv_file import CsvStorage
from .excel import ExcelStorage
from .multi import MultiStorage
from .sqlite import SQLiteStorage

__all__ = [
    "CSV_COLUMNS",
    "RESULT_COLUMNS",
    "StorageProtocol",
    "CsvStorage",
    "SQLiteStorage",
    "ExcelStorage",
    "MultiStorage",
]
