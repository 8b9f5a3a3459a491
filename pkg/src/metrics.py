"""Result tables for benchmark runs."""

from __future__ import annotations

from typing import Any, Dict, List, Sequence, Tuple, Union

import pandas as pd

from .bench import BenchResult, Family, column_label
from .storage import RESULT_COLUMNS

MISSING = "-"

Rows = Sequence[Union[BenchResult, Dict[str, Any]]]


def results_frame(results: Rows) -> pd.DataFrame:
    """Return one row per measurement with the ``RESULT_COLUMNS`` columns."""
    rows = [r.to_row() if isinstance(r, BenchResult) else dict(r) for r in results]
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def _cell(row: pd.Series) -> str:
    if row["verdict"] == "timeout":
        return f">{row['millis'] / 1000.0:g}"
    return f"{row['millis'] / 1000.0:.3f}"


def _column_key(key: Tuple[str, str]) -> Tuple[int, bool]:
    order = [family.value for family in Family]
    family, label = key
    return (order.index(family) if family in order else len(order), label != "Obs.")


def timing_table(results: Rows) -> pd.DataFrame:
    """Pivot timings into seconds.

    Rows are leaf counts and columns are ``(family, Obs.|Wktrc.)``. Families
    keep their declaration order; absent cells hold ``-`` and timeouts read
    ``>limit``.
    """
    frame = results_frame(results)
    if frame.empty:
        return pd.DataFrame()
    frame["label"] = [column_label(relation) for relation in frame["relation"]]
    frame["cell"] = frame.apply(_cell, axis=1)
    frame = frame.drop_duplicates(subset=["leaves", "family", "label"], keep="last")
    table = frame.pivot(index="leaves", columns=["family", "label"], values="cell")
    columns = sorted(table.columns, key=_column_key)
    return table.reindex(columns=pd.MultiIndex.from_tuples(columns)).fillna(MISSING)


def summary(results: Rows) -> pd.DataFrame:
    """Count verdicts and the largest leaf count reached per family and relation."""
    frame = results_frame(results)
    if frame.empty:
        return pd.DataFrame()
    finished = frame[frame["verdict"] != "timeout"]
    grouped = frame.groupby(["family", "relation"])
    table = pd.DataFrame(
        {
            "checks": grouped.size(),
            "holds": grouped["verdict"].apply(lambda v: int((v == "holds").sum())),
            "timeouts": grouped["verdict"].apply(lambda v: int((v == "timeout").sum())),
        }
    )
    table["max_leaves"] = finished.groupby(["family", "relation"])["leaves"].max()
    return table.reset_index()


def _header(column: Any) -> str:
    if isinstance(column, tuple):
        return " ".join(str(part) for part in column)
    return str(column)


def to_markdown(table: pd.DataFrame) -> str:
    """Render a timing table as a GitHub Markdown table."""
    if table.empty:
        return ""
    headers = ["leaves"] + [_header(column) for column in table.columns]
    lines: List[str] = [
        "| " + " | ".join(headers) + " |",
        "|" + "|".join("---:" for _ in headers) + "|",
    ]
    for leaves, row in table.iterrows():
        lines.append("| " + " | ".join([str(leaves), *map(str, row.tolist())]) + " |")
    return "\n".join(lines) + "\n"


def relation_note(results: Rows) -> str:
    """Name the relation behind each ``Obs.`` column.

    The result reads like ``Obs.: weak-bisim for AndOnly; weak-sim for OrOnly``.
    """
    frame = results_frame(results)
    observational = frame[[column_label(r) == "Obs." for r in frame["relation"]]]
    if observational.empty:
        return ""
    families = observational.groupby("relation", sort=True)["family"].unique()
    parts = [
        f"{relation} for {', '.join(names)}" for relation, names in families.items()
    ]
    return "Obs.: " + "; ".join(parts) + "\n"


def render_report(results: Rows) -> str:
    """Timing table, relation note and per-column verdict counts as Markdown."""
    table = to_markdown(timing_table(results))
    if not table:
        return ""
    counts = [
        f"- {row.family} {row.relation}: {row.holds}/{row.checks} hold, "
        f"{row.timeouts} timed out"
        for row in summary(results).itertuples(index=False)
    ]
    return "\n".join([table, relation_note(results), *counts]) + "\n"
