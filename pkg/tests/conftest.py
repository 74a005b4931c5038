import sys

# (sort key, line) pairs appended by test_acceptance.record
ACCEPTANCE_LINES: list[tuple[tuple, str]] = []


def record(criterion: int, label: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}{label}: {detail}"
    ACCEPTANCE_LINES.append(((criterion, label), line))
    print(line, file=sys.stderr)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
