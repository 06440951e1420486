from __future__ import annotations

import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

from lrplab import GraphSample, ModelParams, PreconditionError, demo_schedule, sample_graph
from lrplab.hierarchy import (FailureDiagnosis, LinkIndex, PathCertificate, bad_components,
                              build_block_tree, certificate_bound, classify_blocks,
                              construct_path, partition_block, restricted_distance,
                              sample_good_pairs, split_interval)
from lrplab.metrics import bfs_distances, graph_distance

from conftest import lattice_graph, small_schedule


# -- partitions --------------------------------------------------------------

def test_split_examples():
    assert split_interval(10, 5) == [5, 5]
    assert split_interval(11, 3) == [3, 3, 3, 2]
    assert split_interval(10, 3) == [3, 3, 2, 2]
    assert split_interval(11, 4) == [4, 4, 3]
    assert split_interval(4, 7) == [4]


@given(st.integers(2, 400), st.data())
def test_split_tiles_with_side_bounds(length, data):
    target = data.draw(st.integers(1, length - 1))
    parts = split_interval(length, target)
    assert sum(parts) == length
    assert all(target // 2 <= p <= target for p in parts)


def test_partition_block_product_and_errors():
    blocks = partition_block([10, 11], 3)
    assert len(blocks) == 16
    assert sorted({b.ext for b in blocks}) == sorted({(a, b) for a in (3, 2) for b in (3, 2)})
    cover = np.zeros((10, 11), dtype=int)
    for b in blocks:
        cover[b.lo[0]:b.hi[0], b.lo[1]:b.hi[1]] += 1
    assert np.all(cover == 1)
    with pytest.raises(PreconditionError):
        partition_block([3, 2], 3)


@pytest.mark.parametrize("L,d", [(5, 1), (200, 1), (3000, 1), (30, 2)])
def test_block_tree_tiles_every_level(L, d):
    sched = small_schedule(L)
    tree = build_block_tree(L, sched, d)
    side = 2 * L + 1
    for k in range(1, tree.k2 + 1):
        sizes = tree.segment_sizes(k)
        assert sizes.sum() == side
        Lk = sched.scale(k)
        if Lk < side:
            assert np.all((sizes >= Lk // 2) & (sizes <= Lk))
        # children tile their parent
        par = tree.parents[k]
        assert np.array_equal(np.bincount(par, weights=sizes).astype(int), tree.segment_sizes(k - 1))
        lo, ext = tree.block_extents(k)
        assert np.prod(ext, axis=1).sum() == side**d


def test_block_tree_example_eleven_sites():
    sched = small_schedule(5)
    tree = build_block_tree(5, sched, 1)
    assert sched.scale(1) == 3
    assert tree.segment_sizes(1).tolist() == split_interval(11, 3)
    assert split_interval(11, 4) == [4, 4, 3]


# -- classification oracle ---------------------------------------------------

def naive_labels(graph, tree, sched):
    """Independent per-vertex evaluation of the goodness rules."""
    k1, k2, delta = sched.k1, sched.k2, sched.delta
    n = graph.n_vertices
    verts = np.arange(n)
    blk = {k: tree.block_of(k, verts) for k in range(0, k2 + 1)}
    good = {k2: np.ones(tree.n_blocks(k2), dtype=bool)}
    vgood = np.ones(n, dtype=bool)  # good at levels k+1..k2
    for k in range(k2 - 1, k1 - 1, -1):
        nb = tree.n_blocks(k)
        out = np.zeros(nb, dtype=bool)
        for b in range(nb):
            kids = sorted(set(blk[k + 1][blk[k] == b].tolist()))
            gk = [c for c in kids if good[k + 1][c]]
            if len(gk) < (1 - delta) * len(kids) - 1e-9:
                continue
            ok = True
            for A, B in combinations(gk, 2):
                found = False
                for u, w in graph.long_edges.tolist():
                    if vgood[u] and vgood[w] and {blk[k + 1][u], blk[k + 1][w]} == {A, B}:
                        found = True
                        break
                if not found:
                    ok = False
                    break
            out[b] = ok
        good[k] = out
        vgood = vgood & out[blk[k]]
    G = {}
    for k in range(0, k1):
        nb = tree.n_blocks(k)
        flags = np.zeros(nb, dtype=bool)
        for b in range(nb):
            kids = sorted(set(blk[k + 1][blk[k] == b].tolist()))
            flags[b] = all(any(vgood[u] and vgood[w] and {blk[k + 1][u], blk[k + 1][w]} == {A, B}
                               for u, w in graph.long_edges.tolist())
                           for A, B in combinations(kids, 2))
        G[k] = flags
    return good, vgood, G


@pytest.mark.parametrize("L,d,beta,seed", [(200, 1, 1.0, 0), (200, 1, 1.0, 1), (200, 1, 3.0, 2),
                                           (1000, 1, 1.0, 3), (12, 2, 2.0, 4), (12, 2, 6.0, 5)])
def test_classification_matches_naive_oracle(L, d, beta, seed):
    sched = small_schedule(L) if d == 1 else small_schedule(L, eta=1.3, epsilon=0.9)
    tree = build_block_tree(L, sched, d)
    g = sample_graph(ModelParams(d, 1.5 * d, beta, L, seed=seed))
    lab = classify_blocks(g, tree, sched)
    good, vgood, G = naive_labels(g, tree, sched)
    for k in range(sched.k1, sched.k2 + 1):
        assert np.array_equal(lab.good[k], good[k]), k
    assert np.array_equal(lab.good_vertex_mask(), vgood)
    for k in G:
        assert np.array_equal(lab.G[k], G[k]), k


def test_all_linked_when_every_pair_is_an_edge():
    L = 30
    sched = small_schedule(L)
    tree = build_block_tree(L, sched, 1)
    n = 2 * L + 1
    pairs = [(u, w) for u in range(n) for w in range(u + 2, n)]
    g = GraphSample.from_edges(ModelParams(1, 1.5, 0.0, L), pairs)
    lab = classify_blocks(g, tree, sched)
    assert all(lab.good[k].all() for k in lab.good)
    assert lab.G_all and bad_components(lab).T_L == 0


def test_no_long_edges_makes_multi_child_blocks_bad():
    L = 200
    sched = small_schedule(L)
    tree = build_block_tree(L, sched, 1)
    lab = classify_blocks(lattice_graph(L), tree, sched)
    assert lab.good[sched.k2].all()
    for k in range(sched.k1, sched.k2):
        nc = tree.n_children(k)
        good_kids = np.bincount(tree.parent_of(k + 1, np.arange(tree.n_blocks(k + 1))),
                                weights=lab.good[k + 1], minlength=tree.n_blocks(k))
        assert np.all(~lab.good[k][good_kids >= 2])
        assert np.all(nc >= 1)


@given(st.integers(0, 10**6), st.integers(0, 10**6))
@settings(max_examples=25, deadline=None)
def test_adding_good_edge_never_breaks_goodness(seed, pick):
    L = 200
    sched = small_schedule(L)
    tree = build_block_tree(L, sched, 1)
    g = sample_graph(ModelParams(1, 1.5, 1.0, L, seed=seed))
    lab = classify_blocks(g, tree, sched)
    good_v = np.flatnonzero(lab.good_vertex_mask())
    if len(good_v) < 2:
        return
    rng = np.random.default_rng(pick)
    u, w = sorted(int(t) for t in rng.choice(good_v, 2, replace=False))
    if abs(u - w) == 1:
        return
    g2 = GraphSample.from_edges(g.params, np.vstack([g.long_edges, [[u, w]]]))
    lab2 = classify_blocks(g2, tree, sched)
    for k in lab.good:
        assert np.all(lab2.good[k] >= lab.good[k])


@given(st.integers(0, 10**6))
@settings(max_examples=20, deadline=None)
def test_good_fraction_induction(seed):
    L = 3000
    sched = small_schedule(L)
    tree = build_block_tree(L, sched, 1)
    lab = classify_blocks(sample_graph(ModelParams(1, 1.5, 1.0, L, seed=seed)), tree, sched)
    for k in range(sched.k1, sched.k2 + 1):
        frac = lab.good_fraction(k)[lab.good[k]]
        assert np.all(frac >= (1 - sched.delta) ** (sched.k2 - k) - 1e-12)


# -- bad components ----------------------------------------------------------

def brute_components(mask2d_or_1d):
    """Flood fill with explicit lattice neighbours; returns sup-norm extents."""
    bad = np.argwhere(mask2d_or_1d)
    seen = set()
    out = []
    pts = {tuple(p) for p in bad.tolist()}
    for p in pts:
        if p in seen:
            continue
        stack, comp = [p], []
        seen.add(p)
        while stack:
            q = stack.pop()
            comp.append(q)
            for a in range(len(q)):
                for dlt in (-1, 1):
                    r = list(q)
                    r[a] += dlt
                    r = tuple(r)
                    if r in pts and r not in seen:
                        seen.add(r)
                        stack.append(r)
        c = np.array(comp)
        out.append(int((c.max(axis=0) - c.min(axis=0)).max()))
    return sorted(out)


@pytest.mark.parametrize("L,d,seed", [(1000, 1, 7), (1000, 1, 8), (40, 2, 1), (40, 2, 2)])
def test_bad_components_match_brute_force(L, d, seed):
    sched = small_schedule(L) if d == 1 else small_schedule(L, eta=1.3, epsilon=0.9)
    tree = build_block_tree(L, sched, d)
    lab = classify_blocks(sample_graph(ModelParams(d, 1.5 * d, 1.0, L, seed=seed)), tree, sched)
    comps = bad_components(lab)
    side = 2 * L + 1
    mask = (~lab.good_vertex_mask()).reshape((side,) * d)
    assert sorted(comps.diameters.tolist()) == brute_components(mask)
    assert comps.T_L == max(brute_components(mask), default=0)
    assert (comps.T_L == 0) == (not mask.any())


def test_isolated_and_adjacent_bad_blocks():
    L = 200
    sched = small_schedule(L)
    tree = build_block_tree(L, sched, 1)
    lab = classify_blocks(lattice_graph(L), tree, sched)
    comps = bad_components(lab)
    # Without long edges every block above the leaves is bad: one component spanning the box.
    assert comps.count == 1 and comps.T_L == 2 * L
    # Single bad leaf: flip one label by hand.
    k2 = sched.k2
    one = dict(lab.good_below)
    leaf = np.ones(tree.n_blocks(k2), dtype=bool)
    leaf[3] = False
    one[sched.k1] = leaf
    fake = type(lab)(tree, lab.k1, lab.k2, lab.delta, lab.good, lab.fraction_ok, lab.linked,
                     lab.G, one)
    c = bad_components(fake)
    assert c.count == 1 and c.T_L == tree.segment_sizes(k2)[3] - 1
    leaf[4] = False
    c = bad_components(fake)
    assert c.count == 1 and c.T_L == tree.segment_sizes(k2)[3] + tree.segment_sizes(k2)[4] - 1


# -- restricted distance and certificates -------------------------------------

def test_restricted_distance_against_induced_bfs():
    L = 1000
    sched = small_schedule(L)
    tree = build_block_tree(L, sched, 1)
    g = sample_graph(ModelParams(1, 1.5, 1.0, L, seed=3))
    lab = classify_blocks(g, tree, sched)
    mask = lab.good_vertex_mask()
    keep = np.flatnonzero(mask)
    pos = -np.ones(g.n_vertices, dtype=np.int64)
    pos[keep] = np.arange(len(keep))
    e = g.long_edges
    e = e[mask[e[:, 0]] & mask[e[:, 1]]]
    lat = keep[(keep + 1 < g.n_vertices)]
    lat = lat[mask[np.minimum(lat + 1, g.n_vertices - 1)]]
    sub = np.vstack([e, np.stack([lat, lat + 1], axis=1)])
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import shortest_path
    m = coo_matrix((np.ones(len(sub)), (pos[sub[:, 0]], pos[sub[:, 1]])),
                   shape=(len(keep), len(keep))).tocsr()
    rng = np.random.default_rng(0)
    for x, y in sample_good_pairs(lab, 10, rng):
        ref = shortest_path(m, directed=False, unweighted=True, indices=[pos[x]])[0][pos[y]]
        assert restricted_distance(g, lab, x, y) == ref
    x = int(keep[0])
    assert restricted_distance(g, lab, x, x) == 0


def test_restricted_equals_plain_when_all_good():
    L = 30
    sched = small_schedule(L)
    tree = build_block_tree(L, sched, 1)
    n = 2 * L + 1
    g = GraphSample.from_edges(ModelParams(1, 1.5, 0.0, L),
                               [(u, w) for u in range(n) for w in range(u + 2, n)])
    lab = classify_blocks(g, tree, sched)
    for x, y in [(0, 60), (5, 6), (10, 33)]:
        assert restricted_distance(g, lab, x, y) == graph_distance(g, x, y)


def test_certificates_complete_graph():
    L = 30
    sched = small_schedule(L)
    tree = build_block_tree(L, sched, 1)
    n = 2 * L + 1
    g = GraphSample.from_edges(ModelParams(1, 1.5, 0.0, L),
                               [(u, w) for u in range(n) for w in range(u + 2, n)])
    lab = classify_blocks(g, tree, sched)
    links = LinkIndex(g, tree, lab)
    c0 = construct_path(g, tree, lab, 7, 7, links)
    assert isinstance(c0, PathCertificate) and c0.length == 0
    for x in range(0, n, 7):
        for y in range(0, n, 5):
            if x == y:
                continue
            c = construct_path(g, tree, lab, x, y, links)
            assert isinstance(c, PathCertificate)
            assert c.replay(g) == c.length
            assert 1 <= c.length <= certificate_bound(tree)


def test_certificate_failure_is_diagnosed():
    L = 200
    sched = small_schedule(L)
    tree = build_block_tree(L, sched, 1)
    g = sample_graph(ModelParams(1, 1.5, 3.0, L, seed=1))
    lab = classify_blocks(g, tree, sched)
    good = np.flatnonzero(lab.good_vertex_mask())
    top = tree.block_of(1, good)
    x, y = int(good[top == top.min()][0]), int(good[top == top.max()][-1])
    assert top.min() != top.max()
    # Links from an edgeless copy: the top-level split has nothing to use.
    bare = lattice_graph(L)
    res = construct_path(bare, tree, lab, x, y, LinkIndex(bare, tree, lab))
    assert isinstance(res, FailureDiagnosis) and res.level == 0
    assert "level-1" in res.reason and res.to_dict()["level"] == 0
    bad = np.flatnonzero(~lab.good_vertex_mask())
    if len(bad):
        with pytest.raises(PreconditionError):
            construct_path(g, tree, lab, int(bad[0]), x)


@given(st.integers(0, 10**6))
@settings(max_examples=15, deadline=None)
def test_certificate_soundness_random(seed):
    L = 3000
    sched = small_schedule(L)
    tree = build_block_tree(L, sched, 1)
    g = sample_graph(ModelParams(1, 1.5, 1.0, L, seed=seed))
    lab = classify_blocks(g, tree, sched)
    links = LinkIndex(g, tree, lab)
    for x, y in sample_good_pairs(lab, 5, seed):
        c = construct_path(g, tree, lab, x, y, links)
        if isinstance(c, PathCertificate):
            assert c.replay(g) == c.length
            assert graph_distance(g, x, y) <= c.length <= c.bound_value
            long_set = {tuple(e) for e in g.long_edges.tolist()}
            assert all(tuple(sorted(e)) in long_set for e in c.long_edges)
            assert c.z["0"] == x and c.z["1"] == y


def test_certificate_bound_formula():
    sched = demo_schedule(10**5)
    tree = build_block_tree(10**5, sched, 1)
    assert certificate_bound(tree) == 2**4 - 1 + 2**4 * 590
    assert certificate_bound(sched, 1) == certificate_bound(tree)
    with pytest.raises(PreconditionError):
        certificate_bound(sched)


def test_summary_serializes():
    import json
    L = 200
    sched = small_schedule(L)
    tree = build_block_tree(L, sched, 1)
    lab = classify_blocks(sample_graph(ModelParams(1, 1.5, 1.0, L)), tree, sched)
    out = json.loads(json.dumps({"s": lab.summary(), "c": bad_components(lab).to_dict(),
                                 "t": tree.to_dict()}))
    assert out["s"]["k2"] == sched.k2
