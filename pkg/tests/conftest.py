import sys
from pathlib import Path

import pytest

# let test modules import each other (oracles.py) without packaging tests/
sys.path.insert(0, str(Path(__file__).parent))

# one line per acceptance criterion, echoed at the end of the run so the
# verdicts survive pytest's output capture
_acceptance_lines: list[str] = []


@pytest.fixture(scope="session")
def criterion():
    def record(name: str, passed: bool, detail: str) -> None:
        line = f"{name}: {'PASS' if passed else 'FAIL'} ({detail})"
        _acceptance_lines.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
