"""Shared test plumbing: the acceptance suite records one PASS/FAIL line
per criterion and this hook prints them uncaptured at the end of the run."""

ACCEPTANCE_LINES = []


def record_acceptance(criterion: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE_LINES.append(f"{criterion} {'PASS' if ok else 'FAIL'}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
