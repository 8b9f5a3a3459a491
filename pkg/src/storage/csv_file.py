"""CSV report of benchmark results, written with pandas."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from . import CSV_COLUMNS

logger = logging.getLogger(__name__)


class CsvStorage:
    """Append-only CSV file with the fixed ``CSV_COLUMNS`` header.

    Rows are flushed on every append so a killed run keeps what it measured.
    """

    def __init__(self, file_path: Path, overwrite: bool = True) -> None:
        self.file_path = Path(file_path)
        if overwrite and self.file_path.exists():
            self.file_path.unlink()
        if not self.file_path.exists():
            self.file_path.parent.mkdir(parents=True, exist_ok=True)
            pd.DataFrame(columns=CSV_COLUMNS).to_csv(self.file_path, index=False)
        logger.info(f"CSV report initialized at {self.file_path}")

    def append_row(self, data: Dict[str, Any]) -> None:
        if not data:
            raise ValueError("Data dictionary cannot be empty")
        row = {column: data.get(column) for column in CSV_COLUMNS}
        frame = pd.DataFrame([row], columns=CSV_COLUMNS)
        frame.to_csv(
            self.file_path, mode="a", header=False, index=False, float_format="%.3f"
        )
        logger.debug(f"Appended {row['family']} n={row['leaves']} to {self.file_path}")

    def get_records(self, limit: Optional[int] = None) -> List[Dict[str, Any]]:
        frame = pd.read_csv(self.file_path)
        if limit is not None:
            frame = frame.head(limit)
        return frame.to_dict("records")

    def close(self) -> None:
        logger.debug(f"CSV report closed: {self.file_path}")
