"""Tests for benchmark result tables."""

import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", ".."))

from src.bench import BenchResult, Family
from src.equivalence import RelationKind
from src.metrics import (
    MISSING,
    relation_note,
    render_report,
    results_frame,
    summary,
    timing_table,
    to_markdown,
)
from src.storage import RESULT_COLUMNS


def result(family, leaves, relation, millis, verdict="holds") -> BenchResult:
    return BenchResult(
        family=family,
        leaves=leaves,
        relation=relation,
        millis=millis,
        states_lhs=0 if verdict == "timeout" else 4,
        states_rhs=0 if verdict == "timeout" else 4,
        verdict=verdict,
    )


@pytest.fixture
def results():
    return [
        result(Family.SAND_ONLY, 2, RelationKind.WEAK_BISIM, 1250.0),
        result(Family.AND_ONLY, 1, RelationKind.WEAK_BISIM, 500.0),
        result(
            Family.AND_ONLY, 1, RelationKind.WEAK_TRACE_INCL, 2000.0, verdict="timeout"
        ),
    ]


class TestResultsFrame:
    def test_columns_and_values(self, results) -> None:
        frame = results_frame(results)
        assert list(frame.columns) == RESULT_COLUMNS
        assert frame["family"].tolist() == ["SandOnly", "AndOnly", "AndOnly"]
        assert frame["relation"].tolist()[2] == "weak-trace-incl"

    def test_accepts_stored_rows(self, results) -> None:
        rows = [r.to_row() for r in results]
        assert results_frame(rows).equals(results_frame(results))


class TestTimingTable:
    """Leaf counts by family and relation column, in seconds."""

    def test_layout(self, results) -> None:
        table = timing_table(results)
        assert list(table.index) == [1, 2]
        assert list(table.columns) == [
            ("AndOnly", "Obs."),
            ("AndOnly", "Wktrc."),
            ("SandOnly", "Obs."),
        ]
        assert table.loc[1, ("AndOnly", "Obs.")] == "0.500"
        assert table.loc[1, ("AndOnly", "Wktrc.")] == ">2"
        assert table.loc[1, ("SandOnly", "Obs.")] == MISSING
        assert table.loc[2, ("SandOnly", "Obs.")] == "1.250"

    def test_later_measurement_wins(self, results) -> None:
        rerun = result(Family.AND_ONLY, 1, RelationKind.WEAK_BISIM, 250.0)
        assert timing_table(results + [rerun]).loc[1, ("AndOnly", "Obs.")] == "0.250"

    def test_markdown(self, results) -> None:
        lines = to_markdown(timing_table(results)).splitlines()
        assert lines == [
            "| leaves | AndOnly Obs. | AndOnly Wktrc. | SandOnly Obs. |",
            "|---:|---:|---:|---:|",
            "| 1 | 0.500 | >2 | - |",
            "| 2 | - | - | 1.250 |",
        ]

    def test_empty(self) -> None:
        assert timing_table([]).empty
        assert to_markdown(timing_table([])) == ""


class TestSummary:
    def test_counts(self, results) -> None:
        table = summary(results).set_index(["family", "relation"])
        sand = table.loc[("SandOnly", "weak-bisim")]
        counts = (sand["checks"], sand["holds"], sand["timeouts"], sand["max_leaves"])
        assert counts == (1, 1, 0, 2)
        timed_out = table.loc[("AndOnly", "weak-trace-incl")]
        assert timed_out["timeouts"] == 1
        assert timed_out["holds"] == 0


class TestReport:
    """Markdown report with the relation behind each column."""

    def test_relation_note(self, results) -> None:
        or_only = result(Family.OR_ONLY, 2, RelationKind.WEAK_SIM, 10.0)
        and_sand = result(Family.AND_SAND, 6, RelationKind.WEAK_SIM, 10.0)
        note = relation_note(results + [or_only, and_sand])
        assert note == (
            "Obs.: weak-bisim for SandOnly, AndOnly; weak-sim for OrOnly, AndSand\n"
        )

    def test_no_observational_rows(self) -> None:
        only_traces = [result(Family.AND_ONLY, 1, RelationKind.WEAK_TRACE_INCL, 5.0)]
        assert relation_note(only_traces) == ""

    def test_render_report(self, results) -> None:
        report = render_report(results)
        assert report.startswith(to_markdown(timing_table(results)))
        assert "Obs.: weak-bisim for SandOnly, AndOnly\n" in report
        assert "- AndOnly weak-trace-incl: 0/1 hold, 1 timed out" in report
        assert "- SandOnly weak-bisim: 1/1 hold, 0 timed out" in report

    def test_empty_report(self) -> None:
        assert render_report([]) == ""
