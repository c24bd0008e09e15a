import pytest

_LINES: dict = {}


@pytest.fixture
def record():
    def _record(n: int, ok: bool, detail: str):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES[n] = line
        print(line)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_LINES):
            terminalreporter.write_line(_LINES[n])
