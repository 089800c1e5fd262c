import pytest

# One line per acceptance criterion at the end of the run, so the gate is
# readable without digging through pytest output.
_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or "test_acceptance" not in item.nodeid:
        return
    label = item.originalname.replace("test_", "", 1).replace("_", " ")
    if report.passed:
        _ACCEPTANCE_RESULTS.append((label, "PASS"))
    elif report.failed:
        _ACCEPTANCE_RESULTS.append((label, "FAIL"))
    elif report.skipped:
        _ACCEPTANCE_RESULTS.append((label, "SKIP"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{status:4s}  {label}")
