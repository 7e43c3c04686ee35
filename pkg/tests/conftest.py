import numpy as np
import pytest

from surveydisagree.bvar import simulate_var

_ACCEPTANCE = {}

# bivariate VAR(1) used by several bvar and acceptance tests
REF_A = np.array([[0.5, 0.1], [0.0, 0.3]])
REF_SIGMA = np.array([[1.0, 0.3], [0.3, 1.0]])
REF_INTERCEPT = np.array([0.4, 1.0])


@pytest.fixture(scope="session")
def reference_data():
    return simulate_var(REF_A, REF_SIGMA, 300, seed=7, intercept=REF_INTERCEPT)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    mark = getattr(report, "acceptance", None)
    if mark is None:
        return
    number, title = mark
    ok = report.passed
    prev = _ACCEPTANCE.get(number, (title, True))
    _ACCEPTANCE[number] = (title, prev[1] and ok)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is not None:
        report.acceptance = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[number]
        terminalreporter.write_line(f"AC{number:>2} {'PASS' if ok else 'FAIL'}  {title}")
