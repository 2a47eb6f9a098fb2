import numpy as np
import pytest

from ngle.topology import Graph


@pytest.fixture
def triangle():
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path3():
    return Graph.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def star4():
    return Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])


@pytest.fixture
def pair():
    return Graph.from_edges(2, [(0, 1)])


def binomial_within(count, trials, p, sigmas=3.0):
    """True if ``count`` successes in ``trials`` is within ``sigmas`` sd of Binomial(trials, p)."""
    sd = np.sqrt(trials * p * (1 - p))
    return abs(count - trials * p) <= sigmas * sd


ACCEPTANCE_LOG = []


def record_criterion(number, ok, detail):
    ACCEPTANCE_LOG.append(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
