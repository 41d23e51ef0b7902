import functools

import pytest
from hypothesis import strategies as st

from ettid.enumerate import small_family
from ettid.figures import FIGURES, load_figure
from ettid.graph import Admg

NAMES = ("A", "B", "C", "D", "E")


@st.composite
def admgs(draw, min_n=1, max_n=5):
    """Random ADMG whose directed edges follow a random vertex order."""
    n = draw(st.integers(min_n, max_n))
    vs = list(NAMES[:n])
    order = draw(st.permutations(vs))
    directed, bidirected = set(), set()
    for i in range(n):
        for j in range(i + 1, n):
            if draw(st.booleans()):
                directed.add((order[i], order[j]))
            if draw(st.booleans()):
                bidirected.add(frozenset((order[i], order[j])))
    return Admg(tuple(vs), frozenset(directed), frozenset(bidirected))


@functools.lru_cache(maxsize=None)
def family(max_n=4, min_n=1):
    return tuple(small_family(max_n, min_n))


@pytest.fixture(scope="session")
def figs():
    return {name: load_figure(name) for name in FIGURES}


ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(n, ok, detail)``."""
    def record(n, ok, detail):
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[n] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
