import sys

import pytest

from seqmulti import Bernoulli, GaussianMeanShift, Panel


@pytest.fixture(scope="session")
def gaussian10():
    return Panel.identical(GaussianMeanShift(0.0, 0.5, 1.0), 10)


@pytest.fixture(scope="session")
def gaussian5():
    return Panel.identical(GaussianMeanShift(0.0, 0.5, 1.0), 5)


@pytest.fixture(scope="session")
def bernoulli2():
    return Panel.identical(Bernoulli(0.3, 0.7), 2)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
