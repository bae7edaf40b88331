import pytest

_REPORT: dict[str, str] = {}


@pytest.fixture
def report_criterion():
    """Record one PASS/FAIL line for an acceptance criterion; printed after the run."""

    def record(key: str, passed: bool, detail: str) -> bool:
        _REPORT[key] = f"[{'PASS' if passed else 'FAIL'}] {key}: {detail}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_REPORT):
        terminalreporter.write_line(_REPORT[key])
