import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from leaky_loop.geometry import build_profile, circle, ellipse  # noqa: E402


@pytest.fixture(scope="session")
def unit_circle():
    return build_profile(circle(1.0), 256)


@pytest.fixture(scope="session")
def ellipse21():
    return build_profile(ellipse(2.0, 1.0), 512)


ACCEPTANCE_LINES: list = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
