import pytest

# (criterion, ok, detail) tuples collected by the acceptance suite; the hook
# below echoes them after the run so the verdicts survive output capture.
ACCEPTANCE_RESULTS = []


@pytest.fixture
def acceptance():
    def _record(criterion: str, ok: bool, detail: str):
        ACCEPTANCE_RESULTS.append((criterion, bool(ok), detail))
        assert ok, f"{criterion} FAIL: {detail}"
    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{crit} {'PASS' if ok else 'FAIL'}  {detail}")
