import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# Lines recorded by the acceptance tests; echoed in the terminal summary so the
# PASS/FAIL verdicts are visible even though pytest captures stdout.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    def record(line: str) -> None:
        print(line)
        ACCEPTANCE_LINES.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
