"""Shared test helpers.

The acceptance suite registers one line per criterion here; the terminal
summary prints them all at the end of the run so every criterion shows a
single pass/fail line regardless of output capturing.
"""

ACCEPTANCE_RESULTS = {}


def record_criterion(cid: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[cid] = (passed, detail)
    assert passed, f"criterion {cid} FAIL: {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[cid]
        word = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {cid:2d} {word}: {detail}")
