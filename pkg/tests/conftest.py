import sys

import pytest

from masec.config import SystemConfig


@pytest.fixture
def default_config():
    return SystemConfig()


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    report = getattr(module, "REPORT", None)
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in sorted(report):
        terminalreporter.write_line(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
