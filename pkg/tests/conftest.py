from __future__ import annotations

import pytest

from ruelle import heisenberg as hz


@pytest.fixture(scope="session")
def chi():
    return hz.build_chi_family(3)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
