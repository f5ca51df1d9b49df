"""Shared test plumbing: the acceptance suite registers one line per
criterion here so the verdicts survive pytest's output capture."""

import pytest

ACCEPTANCE_RESULTS = {}


def record_criterion(number: int, description: str, ok: bool, detail: str = ""):
    ACCEPTANCE_RESULTS[number] = (description, bool(ok), detail)


@pytest.fixture
def acceptance():
    # hand the recorder out through a fixture so the tests talk to the
    # same module instance pytest loaded
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        description, ok, detail = ACCEPTANCE_RESULTS[number]
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {description}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
