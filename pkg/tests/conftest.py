import re

ACCEPTANCE_LINES = []


def record(line: str):
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    key = lambda s: int(re.search(r"C(\d+)", s).group(1))
    for line in sorted(ACCEPTANCE_LINES, key=key):
        terminalreporter.write_line(line)
