import contextlib

import pytest

_LINES: list[str] = []


class _Criterion:
    def __init__(self, number):
        self.number = number
        self.failures: list[str] = []
        self.details: list[str] = []

    def check(self, ok: bool, detail: str) -> bool:
        self.details.append(detail)
        if not ok:
            self.failures.append(detail)
        return ok

    def note(self, detail: str) -> None:
        self.details.append(detail)


@pytest.fixture
def criterion():
    """``with criterion(3) as c: c.check(cond, "detail")`` records one PASS/FAIL line."""

    @contextlib.contextmanager
    def run(number):
        c = _Criterion(number)
        try:
            yield c
        except pytest.skip.Exception as exc:
            _emit(f"criterion {number}: SKIP ({exc.msg})")
            raise
        except BaseException as exc:
            _emit(f"criterion {number}: FAIL ({type(exc).__name__}: {exc})")
            raise
        status = "FAIL" if c.failures else "PASS"
        _emit(f"criterion {number}: {status} ({'; '.join(c.details)})")
        assert not c.failures, "; ".join(c.failures)

    return run


def _emit(line: str) -> None:
    _LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
