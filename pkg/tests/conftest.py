from __future__ import annotations

import pytest

from povconc.ingest import CITY, METRO, TractRecord, build_snapshot

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def records_from(rows, msa="M", year=2015, scope=CITY):
    """rows: (universe, poor) or (universe, poor, area) or (tract_id, universe, poor, area)."""
    out = []
    for i, row in enumerate(rows):
        if len(row) == 4:
            tid, t, x, a = row
        elif len(row) == 3:
            (t, x, a), tid = row, f"t{i:03d}"
        else:
            (t, x), a, tid = row, 1.0, f"t{i:03d}"
        out.append(TractRecord(tid, msa, year, x, t, a, 0.0, 0.0, scope))
    return out


def snapshot_from(rows, scope=METRO):
    return build_snapshot(records_from(rows), "M", 2015, scope)


@pytest.fixture
def snap():
    return snapshot_from


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
