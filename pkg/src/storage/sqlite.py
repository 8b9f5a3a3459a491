"""SQLite storage for benchmark results."""

import logging
import sqlite3
from pathlib import Path
from typing import Any, Dict, List, Optional

from . import RESULT_COLUMNS

logger = logging.getLogger(__name__)


class SQLiteStorage:
    """Keeps every benchmark row in a ``bench_results`` table.

    Rows accumulate across runs; each carries the time it was recorded so
    successive runs can be told apart.
    """

    def __init__(self, db_path: Path) -> None:
        """Open (or create) the database at ``db_path``.

        Raises:
            sqlite3.Error: If the database or table cannot be created.
        """
        self.db_path = db_path
        self._connection: Optional[sqlite3.Connection] = None
        self._init_database()

    def _init_database(self) -> None:
        try:
            self._connection = sqlite3.connect(self.db_path, check_same_thread=False)
            self._connection.row_factory = sqlite3.Row
            self._connection.execute(
                """
                CREATE TABLE IF NOT EXISTS bench_results (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    family TEXT NOT NULL,
                    leaves INTEGER NOT NULL,
                    relation TEXT NOT NULL,
                    millis REAL,
                    states_lhs INTEGER,
                    states_rhs INTEGER,
                    verdict TEXT,
                    states_lhs_min INTEGER,
                    states_rhs_min INTEGER,
                    repetitions INTEGER,
                    check_millis REAL,
                    created_at DATETIME DEFAULT CURRENT_TIMESTAMP
                )
            """
            )
            self._connection.commit()
            logger.info(f"SQLite database initialized at {self.db_path}")
        except sqlite3.Error as e:
            logger.error(f"Failed to initialize SQLite database: {e}")
            raise

    def append_row(self, data: Dict[str, Any]) -> None:
        if not data:
            raise ValueError("Data dictionary cannot be empty")
        if not self._connection:
            raise RuntimeError("Database connection is not available")

        placeholders = ", ".join("?" for _ in RESULT_COLUMNS)
        try:
            self._connection.execute(
                f"INSERT INTO bench_results ({', '.join(RESULT_COLUMNS)}) "
                f"VALUES ({placeholders})",
                tuple(data.get(column) for column in RESULT_COLUMNS),
            )
            self._connection.commit()
            logger.debug(
                f"Inserted {data.get('family')} n={data.get('leaves')} "
                f"{data.get('relation')}"
            )
        except sqlite3.Error as e:
            logger.error(f"Failed to insert data into SQLite: {e}")
            raise

    def get_records(self, limit: Optional[int] = None) -> List[Dict[str, Any]]:
        if not self._connection:
            raise RuntimeError("Database connection is not available")

        query = f"SELECT {', '.join(RESULT_COLUMNS)} FROM bench_results ORDER BY id"
        parameters: tuple = ()
        if limit is not None:
            query += " LIMIT ?"
            parameters = (limit,)
        try:
            rows = self._connection.execute(query, parameters).fetchall()
        except sqlite3.Error as e:
            logger.error(f"Failed to retrieve records from SQLite: {e}")
            raise
        records = [{column: row[column] for column in RESULT_COLUMNS} for row in rows]
        logger.debug(f"Retrieved {len(records)} records from SQLite")
        return records

    def close(self) -> None:
        if self._connection:
            try:
                self._connection.close()
                self._connection = None
                logger.debug("SQLite connection closed")
            except sqlite3.Error as e:
                logger.error(f"Error closing SQLite connection: {e}")
