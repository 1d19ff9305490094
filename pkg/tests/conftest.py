import sys

import numpy as np
import pytest

from dagform.laplacian import assemble_laplacian, normalize_laplacian
from dagform.reference import REFERENCE_NEIGHBORS, REFERENCE_NOMINAL, reference_graph, random_initial
from dagform.simulator import LeaderSchedule
from dagform.weights import synthesize_weights


@pytest.fixture
def r():
    return REFERENCE_NOMINAL.copy()


@pytest.fixture
def graph():
    return reference_graph()


@pytest.fixture
def triples(r):
    return synthesize_weights(REFERENCE_NEIGHBORS, r)


@pytest.fixture
def L(graph, triples):
    return normalize_laplacian(assemble_laplacian(graph, triples))


@pytest.fixture
def static_schedule(r):
    return LeaderSchedule.static(r[:2])


@pytest.fixture
def p0_random(r):
    return random_initial(np.random.default_rng(42), r, (1, 2))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
