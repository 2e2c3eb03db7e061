import pytest

# criterion number -> (passed, detail); filled by the acceptance tests
_ACCEPTANCE = {}


@pytest.fixture
def record_acceptance():
    def record(number, title, passed, detail):
        _ACCEPTANCE[number] = (title, bool(passed), detail)

    return record


def format_line(number, title, passed, detail):
    return f"criterion {number} {'PASS' if passed else 'FAIL'}  {title}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(format_line(number, *_ACCEPTANCE[number]))
