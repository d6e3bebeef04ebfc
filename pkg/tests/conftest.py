"""Relay the acceptance suite's per-criterion lines into the terminal summary."""

_acceptance_lines: list[str] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    if report.passed:
        for line in report.capstdout.splitlines():
            if line.startswith("[acceptance]"):
                _acceptance_lines.append(line)
    elif report.failed:
        name = report.nodeid.rsplit("::", 1)[-1]
        _acceptance_lines.append(f"[acceptance] {name} FAIL")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
