from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from lrplab import (ModelParams, ball_growth, bfs_distances, diameter_exact, graph_distance,
                    sample_graph, typical_distance_sample)
from lrplab.metrics import UNREACHABLE, eccentricities

from conftest import lattice_graph, site


def full_distances(g) -> np.ndarray:
    """All-pairs hop counts via scipy, an independent oracle."""
    n = g.n_vertices
    rows, cols = list(g.long_edges[:, 0]), list(g.long_edges[:, 1])
    if g.nn_implicit:
        c = g.coords(np.arange(n))
        for a in range(g.d):
            step = np.zeros(g.d, dtype=np.int64)
            step[a] = 1
            ok = c[:, a] < g.L
            u = np.flatnonzero(ok)
            rows += list(u)
            cols += list(g.index(c[ok] + step))
    m = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    return shortest_path(m, directed=False, unweighted=True)


def small_graph(d, L, beta, seed, nn=True):
    return sample_graph(ModelParams(d, 1.5 * d, beta, L, seed=seed, nn_always=nn))


def test_chain_distances(chain10):
    g = chain10
    o = site(g, -10)
    f = bfs_distances(g, o)
    assert f.dist.tolist() == list(range(21))
    assert graph_distance(g, o, o) == 0
    g2 = lattice_graph(10, edges=[(0, 20)])
    assert graph_distance(g2, 0, 20) == 1
    assert graph_distance(g2, 0, 19) == 2


def test_unreachable_without_nn():
    g = lattice_graph(3, nn=False, edges=[(0, 6)])
    f = bfs_distances(g, 0)
    assert f.dist[6] == 1 and f.dist[3] == UNREACHABLE
    assert graph_distance(g, 0, 3) == float("inf")
    assert f.eccentricity == float("inf")


def test_ball_nn_only():
    g = lattice_graph(30)
    c = ball_growth(g, g.origin, 40)
    assert c.values[:31].tolist() == [2 * r + 1 for r in range(31)]
    assert c.boundary_radius == 30
    g2 = lattice_graph(12, d=2)
    c2 = ball_growth(g2, g2.origin, 12)
    assert c2.values.tolist() == [2 * r * r + 2 * r + 1 for r in range(13)]


@given(st.integers(1, 2), st.integers(1, 9), st.floats(0.0, 4.0), st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_bfs_matches_oracle(d, L, beta, seed):
    g = small_graph(d, L, beta, seed)
    D = full_distances(g)
    src = seed % g.n_vertices
    f = bfs_distances(g, src)
    assert np.array_equal(f.dist, D[src].astype(np.int64))
    assert f.dist[src] == 0
    e = g.long_edges
    if len(e):
        assert np.all(np.abs(f.dist[e[:, 0]] - f.dist[e[:, 1]]) <= 1)
    c = ball_growth(g, src, 6)
    assert c.values[0] == 1
    assert np.all(np.diff(c.values) >= 0)
    assert c.values.tolist() == [int((D[src] <= r).sum()) for r in range(7)]


def test_diameter_examples():
    assert diameter_exact(lattice_graph(7)).value == 14
    big = lattice_graph(3000)
    r = diameter_exact(big)
    assert r.value == 6000 and r.exact and r.method == "exact-ifub"
    g = lattice_graph(2, edges=[(0, 4)])
    assert diameter_exact(g).value == 2


@pytest.mark.parametrize("strategy", ["bounds", "fringe"])
@pytest.mark.parametrize("d,L,seed", [(1, 1500, 1), (1, 1500, 2), (2, 30, 3), (2, 30, 4)])
def test_diameter_search_matches_oracle(strategy, d, L, seed):
    g = small_graph(d, L, 1.0, seed)
    D = full_distances(g)
    r = diameter_exact(g, strategy=strategy, allpairs_threshold=0)
    assert r.value == int(D.max()) and r.exact
    assert graph_distance(g, *r.witness) == r.value


def test_diameter_budget_interval():
    g = small_graph(1, 3000, 1.0, 9)
    true = diameter_exact(g).value
    r = diameter_exact(g, max_bfs=2, allpairs_threshold=0)
    assert r.method == "lower-bound-sweep" and not r.exact
    assert r.lower <= true <= r.upper and r.value == r.lower


def test_diameter_equals_max_eccentricity():
    g = small_graph(2, 6, 1.0, 5)
    ecc, _ = eccentricities(g, np.arange(g.n_vertices))
    assert diameter_exact(g).value == int(np.max(ecc))
    c = ball_growth(g, 0, diameter_exact(g).value)
    assert c.values[-1] == g.n_vertices


def test_typical_distances():
    g = lattice_graph(50)
    for x, y, dxy in typical_distance_sample(g, 200, 4):
        assert dxy == abs(int(g.coords(x)[0]) - int(g.coords(y)[0]))
    one = lattice_graph(1, d=1)
    assert all(t[2] >= 0 for t in typical_distance_sample(one, 3, 0))
    g = small_graph(1, 2000, 1.0, 3)
    for x, y, dxy in typical_distance_sample(g, 100, 1, min_sep=100):
        assert dxy == graph_distance(g, x, y)


def test_typical_distance_band():
    L = 10**5
    g = small_graph(1, L, 1.0, 0)
    sample = typical_distance_sample(g, 1000, 2, min_sep=L // 2, max_sep=L)
    med = np.median([t[2] for t in sample])
    assert np.log(L) < med < np.log(L) ** 3


@given(st.integers(0, 10**6))
@settings(max_examples=15, deadline=None)
def test_triangle_inequality_and_edge_monotonicity(seed):
    g = small_graph(1, 300, 1.0, seed)
    rng = np.random.default_rng(seed)
    trip = rng.integers(0, g.n_vertices, size=(30, 3))
    for x, y, z in trip:
        assert graph_distance(g, x, z) <= graph_distance(g, x, y) + graph_distance(g, y, z)
    u, w = (int(t) for t in rng.choice(g.n_vertices, 2, replace=False))
    before = bfs_distances(g, 0).dist
    more = type(g).from_edges(g.params, np.vstack([g.long_edges, [[u, w]]]), g.nn_implicit)
    after = bfs_distances(more, 0).dist
    assert np.all(after <= before)
