import numpy as np
import pytest

from wcons.measures import EmpiricalMeasure, Gaussian1D

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" and not rep.failed:
        return
    number, text = marker.args
    ok = rep.passed if rep.when == "call" else False
    prev = _criteria.get(number, (True, text))
    _criteria[number] = (prev[0] and ok, text)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        ok, text = _criteria[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {text}")


def random_measure(rng, kind=None, n_atoms=None):
    """Seeded measure of a random kind with moderate location and spread."""
    kind = kind or rng.choice(["gaussian", "empirical", "dirac"])
    if kind == "gaussian":
        return Gaussian1D(rng.uniform(-5, 5), rng.uniform(0.1, 4.0))
    if kind == "dirac":
        return EmpiricalMeasure.dirac(rng.uniform(-5, 5))
    k = n_atoms or int(rng.integers(2, 8))
    return EmpiricalMeasure(rng.uniform(-5, 5, k), rng.dirichlet(np.ones(k)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
