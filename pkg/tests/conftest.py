import sys
from collections import defaultdict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_outcomes: dict = defaultdict(list)
_titles: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    _titles[number] = title
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes[number].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _titles:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_titles):
        results = _outcomes[number]
        if results and all(r == "skipped" for r in results):
            status = "SKIP"
        elif results and all(r in ("passed", "skipped") for r in results):
            status = "PASS"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {_titles[number]}")
