import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from codedshuffle import kernels  # noqa: E402

BACKENDS = ["python"] + (["cython"] if kernels.has_compiled() else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


# one PASS/FAIL line per acceptance criterion, printed after the run
_criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    failed = report.failed or (report.when == "call" and report.outcome != "passed")
    if report.when == "call" or failed:
        prev = _criteria.get(number, (title, True))
        _criteria[number] = (title, prev[1] and not failed and report.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
