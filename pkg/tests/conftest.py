"""Shared fixtures and the acceptance summary printed at the end of a run."""
import pytest

_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(number, name, passed, detail)``."""

    def _report(number, name, passed, detail=""):
        line = f"criterion {number:>2} {name}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(line)
