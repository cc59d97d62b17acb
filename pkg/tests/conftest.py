import numpy as np
import pytest

from cglwave.spectral import GridSpec, PerturbationParams

@pytest.fixture
def grid1():
    return GridSpec(1, 256)

@pytest.fixture
def grid2():
    return GridSpec(2, 64, 2.0 * np.pi * 4)

@pytest.fixture
def params():
    return PerturbationParams(0.1, 0.1, 2)

CRITERIA = {}

def pytest_collection_modifyitems(items):
    for item in items:
        if item.get_closest_marker("criterion") is None:
            continue
        # acceptance checks run in the default session; the marker only labels them
        item.add_marker(pytest.mark.slow)

@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    ok = rep.passed
    prev = CRITERIA.get(number)
    if prev is not None:
        ok = ok and prev[1]
        detail = "; ".join(x for x in (prev[2], detail) if x)
    CRITERIA[number] = (title, ok, detail)

def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, ok, detail = CRITERIA[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {status}  {title}" + (f"  [{detail}]" if detail else ""))
