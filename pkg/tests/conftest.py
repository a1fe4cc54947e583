"""Shared test plumbing: the acceptance-criteria report."""

_acceptance_lines: list[str] = []


def record_criterion(num: int, name: str, ok: bool, detail: str) -> str:
    """Format, remember and print one acceptance-criterion verdict line."""
    line = f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'} - {name}: {detail}"
    _acceptance_lines.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
