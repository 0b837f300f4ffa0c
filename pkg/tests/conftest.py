"""Shared test helpers.

The acceptance tests record one summary line each; the hook below
re-prints them at the end of the run so the verdict is visible even
when pytest captures stdout.
"""

import pytest

_CRITERION_LINES = []


def _record(num, name, ok, detail):
    line = "%s criterion %2d (%s): %s" % ("PASS" if ok else "FAIL", num, name, detail)
    _CRITERION_LINES.append(line)
    print(line)


@pytest.fixture
def criterion():
    return _record


def pytest_terminal_summary(terminalreporter):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERION_LINES):
            terminalreporter.write_line(line)
