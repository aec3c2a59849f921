import re

import numpy as np
import pytest

from rateblur.dataio import DEFAULT_PROFILE, synthesize_tensor
from rateblur.statmath import RandomSeed

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")

# populated by pytest_runtest_logreport, rendered by pytest_terminal_summary
_criterion_results = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    m = _CRITERION.search(report.nodeid)
    if m is None:
        return
    num, slug = int(m.group(1)), m.group(2)
    detail = ""
    for key, value in report.user_properties:
        if key == "detail":
            detail = str(value)
    _criterion_results[num] = (slug, report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criterion_results):
        slug, outcome, detail = _criterion_results[num]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {num:2d} [{slug}]: {verdict}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_tensor():
    """The calibrated 67-user tensor every data-dependent study runs on."""
    return synthesize_tensor(DEFAULT_PROFILE, users=67, seed=RandomSeed(42))


@pytest.fixture(scope="session")
def small_tensor():
    """8-user tensor for fast structural tests."""
    return synthesize_tensor(DEFAULT_PROFILE, users=8, seed=RandomSeed(7))


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
