import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""

    def report(number, passed, detail, elapsed, limit):
        timely = limit is None or elapsed < limit
        status = "PASS" if passed and timely else "FAIL"
        budget = "" if limit is None else f" (limit {limit:g}s)"
        line = f"criterion {number:>2}: {status}  {detail}  [{elapsed:.1f}s{budget}]"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed and timely

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
