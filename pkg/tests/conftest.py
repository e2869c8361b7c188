import numpy as np
import pytest
from hypothesis import strategies as st

from lapcert.generators import FamilySpec, generate_family
from lapcert.graph import build_graph_arrays

FAMILY_SPECS = [
    FamilySpec("single_edge", 2),
    FamilySpec("path", 3),
    FamilySpec("path", 17),
    FamilySpec("cycle", 12),
    FamilySpec("star", 4),
    FamilySpec("star", 30),
    FamilySpec("complete", 9),
    FamilySpec("grid", 36),
    FamilySpec("grid", 60, dims=(6, 10)),
    FamilySpec("path", 200),
    FamilySpec("grid", 196),
]


def random_graph(rng, n, p=0.15, directed=False, weighted=False):
    """Erdos-Renyi style test graph; isolated vertices get self-loops."""
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    if not directed:
        mask = np.triu(mask)
    rows, cols = np.nonzero(mask)
    w = rng.uniform(0.1, 3.0, rows.size) if weighted else None
    return build_graph_arrays(rows, cols, w, n, symmetrize=not directed)


@pytest.fixture(params=FAMILY_SPECS, ids=lambda s: f"{s.kind}{s.n}")
def family_graph(request):
    return generate_family(request.param)


@pytest.fixture
def single_edge():
    return generate_family(FamilySpec("single_edge", 2))


@pytest.fixture
def p3():
    return generate_family(FamilySpec("path", 3))


@pytest.fixture
def star4():
    return generate_family(FamilySpec("star", 4))


@st.composite
def graphs(draw, max_n=24, directed=None):
    n = draw(st.integers(2, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    p = draw(st.floats(0.05, 0.6))
    is_directed = draw(st.booleans()) if directed is None else directed
    weighted = draw(st.booleans())
    return random_graph(np.random.default_rng(seed), n, p, is_directed, weighted)


alphas = st.floats(0.01, 0.99)


# filled by test_acceptance.py, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
