import pytest

_ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    """Record one acceptance check: ``criterion(number, label, passed, detail)``."""

    def record(number: int, label: str, passed: bool, detail: str = "") -> bool:
        _ACCEPTANCE.setdefault(number, []).append((label, bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        checks = _ACCEPTANCE[number]
        ok = all(p for _, p, _ in checks)
        failed = [f"{label} ({detail})" if detail else label for label, p, detail in checks if not p]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} [{sum(p for _, p, _ in checks)}/{len(checks)} checks]"
        if failed:
            line += " failing: " + "; ".join(failed)
        tr.write_line(line)
