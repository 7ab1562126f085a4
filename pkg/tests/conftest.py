"""Shared pytest plumbing: acceptance reporting and markers."""

ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


def record_criterion(number: int, description: str, passed: bool, detail: str = ""):
    ACCEPTANCE_RESULTS.append((number, description, passed, detail))


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance-gate criteria")
    config.addinivalue_line("markers", "slow: long-running end-to-end runs")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {number:2d}: {description}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
