"""Shared fixtures: a recorder that turns the acceptance checks into one
verdict line each at the end of the run."""

import pytest

_VERDICTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance():
    """Record (name, ok, detail); the terminal summary prints one line
    per recorded check.  Returns the recorder so a test can both log
    the verdict and assert on it.
    """

    def record(name: str, ok: bool, detail: str) -> bool:
        _VERDICTS.append((name, ok, detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance")
    for name, ok, detail in _VERDICTS:
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"{verdict} {name}: {detail}")
