import sys

import pytest

from csach import kernels
from csach.graph import Graph

# Four-node diamond with a cross arc; 1-based labels 1..4 become ids 0..3.
DIAMOND_ARCS = [(0, 1, 2.0), (0, 2, 0.5), (2, 1, 1.0), (1, 3, 1.0), (2, 3, 2.0)]
DIAMOND_DIMACS = "p sp 4 5\na 1 2 2\na 1 3 .5\na 3 2 1\na 2 4 1\na 3 4 2\n"

BACKENDS = ["python"] + (["cython"] if kernels.compiled_available() else [])


@pytest.fixture
def diamond() -> Graph:
    return Graph.from_arcs(4, DIAMOND_ARCS)


@pytest.fixture
def chain3() -> Graph:
    return Graph.from_arcs(3, [(0, 1, 1.0), (1, 2, 1.0)])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
