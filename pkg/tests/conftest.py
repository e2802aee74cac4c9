import pytest

from quadopo.model import SystemParams

_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture
def base():
    """gamma=10, kappa=1, chi=1e-2; eps=400 is 0.8 of threshold."""
    return SystemParams(chi=0.01, eps=400.0, gamma=10.0, kappa=1.0)


@pytest.fixture
def criterion():
    """Record one acceptance line; call with (label, passed, detail)."""
    def record(label, passed, detail=""):
        _CRITERIA.append((label, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {label} {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {label} {detail}")
