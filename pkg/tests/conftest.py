from fractions import Fraction as F
from pathlib import Path

import pytest

from mixlab.chain import build_chain, read_chain_file

DATA = Path(__file__).parent / "data"


def cycle_walk(n: int):
    """Simple random walk on the n-cycle (period 2 for even n)."""
    trans = []
    for i in range(n):
        trans.append((i, (i + 1) % n, F(1, 2)))
        trans.append((i, (i - 1) % n, F(1, 2)))
    return list(range(n)), trans


def two_state_uniform():
    return build_chain([0, 1], [(0, 0, F(1, 2)), (0, 1, F(1, 2)), (1, 0, F(1, 2)), (1, 1, F(1, 2))])


@pytest.fixture
def lazy_k4():
    return read_chain_file(DATA / "lazy_k4.chain")


@pytest.fixture
def two_state():
    return two_state_uniform()


def random_lazy_chain(n: int, rng):
    """Lazy walk with random integer edge weights on a random connected graph."""
    w = {}
    for i in range(1, n):
        j = int(rng.integers(i))
        w[(i, j)] = w[(j, i)] = int(rng.integers(1, 6))
    for _ in range(n):
        i, j = (int(v) for v in rng.integers(n, size=2))
        if i != j:
            w[(i, j)] = w[(j, i)] = int(rng.integers(1, 6))
    deg = [sum(v for (a, _), v in w.items() if a == i) for i in range(n)]
    trans = [(i, i, F(1, 2)) for i in range(n)] + [(a, b, F(v, 2 * deg[a])) for (a, b), v in w.items()]
    return build_chain(list(range(n)), trans)


# one PASS/FAIL line per acceptance criterion in the terminal summary
_CRITERIA = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_CRITERIA):
        name = nodeid.split("::test_criterion_")[1]
        num, _, label = name.partition("_")
        verdict = "PASS" if _CRITERIA[nodeid] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {int(num):2d} {verdict}  {label.replace('_', ' ')}")
