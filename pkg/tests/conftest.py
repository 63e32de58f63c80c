import sys
from pathlib import Path

import pytest

# test helpers (randgen, oracles) live next to the tests
sys.path.insert(0, str(Path(__file__).parent))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): an acceptance criterion")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    number, title = marker.args
    detail = dict(rep.user_properties).get("detail", "")
    if rep.failed and call.excinfo is not None:
        detail = call.excinfo.exconly().splitlines()[0][:160]
    item.config._criteria[number] = (title, "PASS" if rep.passed else "FAIL", rep.duration, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config._criteria
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, verdict, duration, detail = results[number]
        line = f"{verdict} criterion {number}: {title} [{duration:.2f}s]"
        terminalreporter.write_line(f"{line} - {detail}" if detail else line)
