"""Shared test fixtures: the acceptance-criterion result recorder."""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    """Record one pass/fail line for an acceptance criterion.

    Lines are echoed immediately (visible under -s) and replayed in a
    dedicated terminal-summary section so they always reach the final
    report, pass or fail.
    """

    def _record(line: str) -> None:
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
