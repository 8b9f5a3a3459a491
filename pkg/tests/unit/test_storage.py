"""Tests for the benchmark result backends."""

import os
import sys
from pathlib import Path
from typing import Any, Dict
from unittest.mock import patch

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", ".."))

from src.storage import CSV_COLUMNS, RESULT_COLUMNS, StorageProtocol
from src.storage.csv_file import CsvStorage
from src.storage.excel import ExcelStorage
from src.storage.multi import MultiStorage
from src.storage.sqlite import SQLiteStorage


@pytest.fixture
def sample_row() -> Dict[str, Any]:
    return {
        "family": "AndOnly",
        "leaves": 3,
        "relation": "weak-bisim",
        "millis": 1.25,
        "states_lhs": 8,
        "states_rhs": 8,
        "verdict": "holds",
        "states_lhs_min": 8,
        "states_rhs_min": 8,
        "repetitions": 3,
        "check_millis": 0.75,
    }


class TestStorageProtocol:
    def test_storage_protocol_interface(self) -> None:
        assert hasattr(StorageProtocol, "append_row")
        assert hasattr(StorageProtocol, "get_records")
        assert hasattr(StorageProtocol, "close")

    def test_columns(self) -> None:
        assert ",".join(CSV_COLUMNS) == (
            "family,leaves,relation,millis,states_lhs,states_rhs,verdict"
        )
        assert RESULT_COLUMNS[: len(CSV_COLUMNS)] == CSV_COLUMNS


class TestCsvStorage:
    """The primary CSV report."""

    def test_header_written_on_open(self, tmp_path: Path) -> None:
        path = tmp_path / "out" / "results.csv"
        CsvStorage(path)
        assert path.read_text().splitlines() == [
            "family,leaves,relation,millis,states_lhs,states_rhs,verdict"
        ]

    def test_append_and_read(self, tmp_path: Path, sample_row: Dict[str, Any]) -> None:
        storage = CsvStorage(tmp_path / "results.csv")
        storage.append_row(sample_row)
        storage.append_row({**sample_row, "leaves": 4, "millis": 2.0})
        lines = (tmp_path / "results.csv").read_text().splitlines()
        assert lines[1] == "AndOnly,3,weak-bisim,1.250,8,8,holds"
        records = storage.get_records()
        assert [record["leaves"] for record in records] == [3, 4]
        assert storage.get_records(limit=1)[0]["verdict"] == "holds"

    def test_overwrite_and_append_modes(self, tmp_path: Path, sample_row) -> None:
        path = tmp_path / "results.csv"
        CsvStorage(path).append_row(sample_row)
        assert len(CsvStorage(path, overwrite=False).get_records()) == 1
        assert CsvStorage(path).get_records() == []

    def test_empty_row_rejected(self, tmp_path: Path) -> None:
        with pytest.raises(ValueError):
            CsvStorage(tmp_path / "results.csv").append_row({})


class TestSQLiteStorage:
    @pytest.fixture
    def sqlite_storage(self, tmp_path: Path) -> SQLiteStorage:
        storage = SQLiteStorage(tmp_path / "bench.db")
        yield storage
        storage.close()

    def test_database_initialization(self, sqlite_storage: SQLiteStorage) -> None:
        tables = sqlite_storage._connection.execute(
            "SELECT name FROM sqlite_master WHERE type='table'"
        ).fetchall()
        assert "bench_results" in [row[0] for row in tables]

    def test_append_and_limit(self, sqlite_storage: SQLiteStorage, sample_row) -> None:
        for leaves in (1, 2, 3):
            sqlite_storage.append_row({**sample_row, "leaves": leaves})
        records = sqlite_storage.get_records(limit=2)
        assert [record["leaves"] for record in records] == [1, 2]
        assert records[0]["states_lhs_min"] == 8
        assert records[0]["repetitions"] == 3
        assert records[0]["check_millis"] == 0.75

    def test_rows_accumulate_across_runs(self, tmp_path: Path, sample_row) -> None:
        path = tmp_path / "bench.db"
        for _ in range(2):
            storage = SQLiteStorage(path)
            storage.append_row(sample_row)
            storage.close()
        storage = SQLiteStorage(path)
        assert len(storage.get_records()) == 2
        storage.close()

    def test_closed_connection(self, sqlite_storage: SQLiteStorage, sample_row) -> None:
        sqlite_storage.close()
        with pytest.raises(RuntimeError):
            sqlite_storage.append_row(sample_row)

    def test_empty_row_rejected(self, sqlite_storage: SQLiteStorage) -> None:
        with pytest.raises(ValueError):
            sqlite_storage.append_row({})


class TestExcelStorage:
    def test_headers_and_rows(self, tmp_path: Path, sample_row) -> None:
        path = tmp_path / "bench.xlsx"
        storage = ExcelStorage(path)
        storage.append_row(sample_row)
        storage.close()

        reopened = ExcelStorage(path)
        records = reopened.get_records()
        assert len(records) == 1
        assert records[0]["family"] == "AndOnly"
        assert list(records[0]) == RESULT_COLUMNS
        reopened.close()

    def test_unknown_columns_skipped(self, tmp_path: Path, sample_row) -> None:
        storage = ExcelStorage(tmp_path / "bench.xlsx")
        storage.append_row({**sample_row, "extra": "ignored"})
        assert "extra" not in storage.get_records()[0]
        storage.close()

    def test_closed_storage(self, tmp_path: Path, sample_row) -> None:
        storage = ExcelStorage(tmp_path / "bench.xlsx")
        storage.close()
        with pytest.raises(RuntimeError):
            storage.append_row(sample_row)


class TestMultiStorage:
    """Fan-out to the CSV report and optional copies."""

    def test_csv_only(self, tmp_path: Path, sample_row) -> None:
        storage = MultiStorage(tmp_path / "results.csv")
        storage.append_row(sample_row)
        assert storage.get_backend_status() == {
            "csv": True,
            "sqlite": False,
            "excel": False,
        }
        assert storage.get_records()[0]["relation"] == "weak-bisim"
        storage.close()

    def test_all_backends(self, tmp_path: Path, sample_row) -> None:
        storage = MultiStorage(
            tmp_path / "results.csv", tmp_path / "bench.db", tmp_path / "bench.xlsx"
        )
        storage.append_row(sample_row)
        assert storage.active_backends == ["CSV", "SQLite", "Excel"]
        assert len(storage.sqlite_storage.get_records()) == 1
        assert len(storage.excel_storage.get_records()) == 1
        storage.close()

    def test_optional_backend_failure_is_skipped(
        self, tmp_path: Path, sample_row
    ) -> None:
        failing = RuntimeError("locked")
        with patch("src.storage.multi.SQLiteStorage", side_effect=failing):
            storage = MultiStorage(
                tmp_path / "results.csv", sqlite_path=tmp_path / "bench.db"
            )
        assert storage.get_backend_status()["sqlite"] is False
        storage.append_row(sample_row)
        assert len(storage.get_records()) == 1

    def test_failing_copy_does_not_stop_csv(self, tmp_path: Path, sample_row) -> None:
        storage = MultiStorage(
            tmp_path / "results.csv", sqlite_path=tmp_path / "bench.db"
        )
        failing = RuntimeError("disk")
        with patch.object(storage.sqlite_storage, "append_row", side_effect=failing):
            storage.append_row(sample_row)
        assert len(storage.get_records()) == 1
        storage.close()

    def test_empty_row_rejected(self, tmp_path: Path) -> None:
        with pytest.raises(ValueError):
            MultiStorage(tmp_path / "results.csv").append_row({})
