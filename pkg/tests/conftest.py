import sys
from pathlib import Path

import pytest

# make the oracle helpers importable as a plain module
sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion of a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = (m.args[0], m.args[1])


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    # the call phase decides, unless setup already failed
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    num, title = crit
    entry = _CRITERIA.setdefault(num, {"title": title, "tests": []})
    entry["tests"].append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        e = _CRITERIA[num]
        failed = [name for name, out in e["tests"] if out != "passed"]
        status = "FAIL" if failed else "PASS"
        extra = f" (failed: {', '.join(failed)})" if failed else ""
        tr.write_line(f"criterion {num:2d}: {status}  {e['title']}{extra}")
