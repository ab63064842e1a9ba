import logging

import numpy as np
import pytest

from spinslosh import load_bundled, run_closed_loop, run_open_loop

logging.getLogger("spinslosh").setLevel(logging.WARNING)


@pytest.fixture(scope="session")
def closed_scenario():
    return load_bundled("closed_loop_spinup.scn")


@pytest.fixture(scope="session")
def open_scenario():
    return load_bundled("open_loop_flatspin.scn")


@pytest.fixture(scope="session")
def closed_trace(closed_scenario):
    run_closed_loop(closed_scenario)  # warm the compiled kernels
    return run_closed_loop(closed_scenario)


@pytest.fixture(scope="session")
def open_trace(open_scenario):
    return run_open_loop(open_scenario)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ---- acceptance summary --------------------------------------------------------
# Tests marked ``acceptance(n, title)`` get one PASS/FAIL line each in the terminal summary.

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    n, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _, status, details = _ACCEPTANCE.get(n, (title, "PASS", []))
        if not rep.passed:
            status = "FAIL"
            details.append(str(rep.longrepr).splitlines()[-1])
        elif getattr(item, "acceptance_detail", ""):
            details.append(item.acceptance_detail)
        _ACCEPTANCE[n] = (title, status, details)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, status, details = _ACCEPTANCE[n]
        terminalreporter.write_line(f"{status} criterion {n:2d}: {title}")
        for d in details:
            terminalreporter.write_line(f"    {d}")
