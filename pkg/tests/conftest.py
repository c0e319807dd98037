import pytest

ACCEPTANCE = {}


def record(criterion, passed, detail=""):
    """Store one sub-check of an acceptance criterion for the end-of-run summary."""
    ACCEPTANCE.setdefault(criterion, []).append((bool(passed), detail))


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[criterion]
        ok = all(p for p, _ in checks)
        details = "; ".join(d for _, d in checks if d)
        terminalreporter.write_line(f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {details}")
