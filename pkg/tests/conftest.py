import pytest

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion for the summary table.

    Usage: ``criterion(3, "schedule conservation", ok, detail)``.  The test
    still asserts on its own; this only feeds the printed report.
    """

    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        ACCEPTANCE[number] = (bool(ok), f"{title}: {detail}" if detail else title)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {text}")
