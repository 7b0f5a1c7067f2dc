import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# Filled by test_acceptance.record; printed once at the end of the run.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
