from __future__ import annotations

import numpy as np
import pytest

from lrplab import GraphSample, ModelParams


def lattice_graph(L: int, d: int = 1, edges=(), *, nn: bool = True, s: float = 1.5) -> GraphSample:
    """Box graph with beta = 0 plus the given explicit edges (vertex indices)."""
    params = ModelParams(d=d, s=s, beta=0.0, L=L, nn_always=nn)
    return GraphSample.from_edges(params, np.asarray(list(edges), dtype=np.int64).reshape(-1, 2))


def site(g: GraphSample, *coords) -> int:
    return int(g.index(np.array(coords, dtype=np.int64)))


@pytest.fixture
def chain10():
    return lattice_graph(10)


SMALL_SCHEDULE = dict(s_prime=1.52, gamma=0.8, zeta=0.75, theta=1.5)


def small_schedule(L: int, eta: float = 2.0, epsilon: float = 1.0, **kw):
    """Demo schedule with several classified levels on a small box."""
    import warnings

    from lrplab import build_schedule
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_schedule(L, mode="demo", eta=eta, epsilon=epsilon,
                              **{**SMALL_SCHEDULE, **kw})


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
