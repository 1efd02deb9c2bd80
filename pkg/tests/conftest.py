import pytest

ACCEPTANCE = []


@pytest.fixture
def record():
    """Collect one ``PASS``/``FAIL`` line per acceptance criterion."""

    def _record(label, ok, detail=""):
        ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
