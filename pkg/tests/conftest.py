import pytest

_RESULTS = []


@pytest.fixture
def record():
    """Log one acceptance line: ``record(label, ok, detail)``."""

    def _record(label, ok, detail=""):
        _RESULTS.append((label, bool(ok), detail))
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
