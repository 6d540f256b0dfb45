"""Acceptance-criterion result recording and end-of-run summary."""

import pytest


class AcceptanceLog:
    def __init__(self):
        self.results = {}

    def record(self, criterion: str, ok: bool, detail: str = "") -> None:
        self.results[criterion] = (ok, detail)


_LOG = AcceptanceLog()


@pytest.fixture(scope="session")
def acceptance_log():
    return _LOG


def pytest_terminal_summary(terminalreporter):
    if not _LOG.results:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_LOG.results):
        ok, detail = _LOG.results[criterion]
        status = "PASS" if ok else "FAIL"
        line = f"{criterion}: {status}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
