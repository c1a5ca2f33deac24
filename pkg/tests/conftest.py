import pytest

# one line per acceptance criterion, echoed in the terminal summary so the
# verdicts are visible without -s
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def acceptance_report():
    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
