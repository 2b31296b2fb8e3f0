"""Shared fixtures: the acceptance verdict collector."""
import pytest

_VERDICTS = []


class Verdict:
    """Record one acceptance line, ``PASS``/``FAIL`` with the measured quantities, then assert."""

    def __call__(self, number, name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {name}" + (f" -- {detail}" if detail else "")
        print(line)
        _VERDICTS.append(line)
        assert ok, line


@pytest.fixture
def verdict():
    return Verdict()


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
