import numpy as np
import pytest

from starmetric import (BUILTINS, LUKASIEWICZ, MAXIMUM, STAR_P, STAR_S, induced_metric,
                        product_max, product_T, signed_line_space)


@pytest.fixture(params=sorted(BUILTINS))
def star(request):
    return BUILTINS[request.param]


@pytest.fixture
def line():
    return signed_line_space(LUKASIEWICZ)


@pytest.fixture
def spaces():
    return {
        "d_L": induced_metric(LUKASIEWICZ),
        "d_s": induced_metric(STAR_S),
        "d_p": induced_metric(STAR_P),
        "d_max": induced_metric(MAXIMUM),
        "max(d_p,d_p)": product_max([induced_metric(STAR_P)] * 2),
        "T(d_s,d_s,d_s)": product_T([induced_metric(STAR_S)] * 3),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance summary -------------------------------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "call" or rep.failed:
        ok = _CRITERIA.get(number, (title, True))[1] and rep.passed
        _CRITERIA[number] = (title, ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}")
