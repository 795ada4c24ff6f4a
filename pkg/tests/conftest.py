import contextlib

import pytest

_LOG: dict[int, list[tuple[bool, str]]] = {}


class AcceptanceLog:
    @contextlib.contextmanager
    def check(self, criterion: int, label: str):
        """Record PASS/FAIL for one part of an acceptance criterion."""
        try:
            yield
        except BaseException as exc:
            _LOG.setdefault(criterion, []).append((False, f"{label}: {exc}".splitlines()[0][:300]))
            raise
        _LOG.setdefault(criterion, []).append((True, label))


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _LOG:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_LOG):
        parts = _LOG[crit]
        ok = all(p for p, _ in parts)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}")
        for p, label in parts:
            tr.write_line(f"    [{'ok' if p else 'FAILED'}] {label}")
