"""Collects acceptance results and prints one line per criterion after the run."""

import pytest

RESULTS: dict = {}


@pytest.fixture
def acceptance():
    def record(number: int, passed: bool, detail: str):
        RESULTS[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
