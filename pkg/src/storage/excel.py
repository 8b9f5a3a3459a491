"""Excel workbook of benchmark results."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

try:
    from openpyxl import Workbook, load_workbook
    from openpyxl.worksheet.worksheet import Worksheet
except ImportError:
    raise ImportError(
        "openpyxl is required for Excel storage. Install with: pip install openpyxl"
    )

from . import RESULT_COLUMNS

logger = logging.getLogger(__name__)

SHEET_NAME = "bench_results"


class ExcelStorage:
    """Rows go to the ``bench_results`` sheet; columns are matched by header name."""

    def __init__(self, file_path: Path) -> None:
        self.file_path = Path(file_path)
        self._workbook: Optional[Workbook] = None
        self._worksheet: Optional[Worksheet] = None
        self._header_map: Dict[str, int] = {}
        self._is_closed = False
        self._init_workbook()

    def _init_workbook(self) -> None:
        try:
            if self.file_path.exists():
                self._workbook = load_workbook(self.file_path)
                if SHEET_NAME in self._workbook.sheetnames:
                    self._worksheet = self._workbook[SHEET_NAME]
                else:
                    self._worksheet = self._workbook.create_sheet(SHEET_NAME)
            else:
                self._workbook = Workbook()
                if "Sheet" in self._workbook.sheetnames:
                    self._workbook.remove(self._workbook["Sheet"])
                self._worksheet = self._workbook.create_sheet(SHEET_NAME)
            self._read_headers()
            self._save_workbook()
            logger.info(f"Excel workbook initialized at {self.file_path}")
        except Exception as e:
            logger.error(f"Failed to initialize Excel workbook: {e}")
            raise

    def _read_headers(self) -> None:
        assert self._worksheet is not None
        self._header_map = {
            str(cell.value): column
            for column, cell in enumerate(self._worksheet[1], 1)
            if cell.value
        }
        if not self._header_map:
            for column, header in enumerate(RESULT_COLUMNS, 1):
                self._worksheet.cell(row=1, column=column, value=header)
            self._header_map = {header: i for i, header in enumerate(RESULT_COLUMNS, 1)}
            logger.debug("Created Excel headers")

    def _save_workbook(self) -> None:
        if not self._workbook:
            raise RuntimeError("Workbook is not available")
        try:
            self._workbook.save(self.file_path)
        except Exception as e:
            logger.error(f"Failed to save Excel workbook: {e}")
            raise

    def append_row(self, data: Dict[str, Any]) -> None:
        if self._is_closed:
            raise RuntimeError("Excel storage is closed")
        if not data:
            raise ValueError("Data dictionary cannot be empty")
        assert self._worksheet is not None

        next_row = self._worksheet.max_row + 1
        for key, value in data.items():
            column = self._header_map.get(key)
            if column is None:
                logger.warning(f"Column '{key}' not found in Excel headers. Skipping.")
                continue
            self._worksheet.cell(row=next_row, column=column, value=value)
        self._save_workbook()

    def get_records(self, limit: Optional[int] = None) -> List[Dict[str, Any]]:
        if self._is_closed:
            raise RuntimeError("Excel storage is closed")
        assert self._worksheet is not None

        last_row = self._worksheet.max_row
        if limit is not None:
            last_row = min(last_row, 1 + limit)
        return [
            {
                header: self._worksheet.cell(row=row, column=column).value
                for header, column in self._header_map.items()
            }
            for row in range(2, last_row + 1)
        ]

    def close(self) -> None:
        if self._is_closed:
            return
        try:
            if self._workbook:
                self._save_workbook()
                self._workbook.close()
                self._workbook = None
                self._worksheet = None
            self._is_closed = True
            logger.debug("Excel workbook closed")
        except Exception as e:
            logger.error(f"Error closing Excel workbook: {e}")
