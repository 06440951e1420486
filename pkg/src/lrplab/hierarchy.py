"""Nested block partition, good/bad classification and hierarchical paths.

Level 0 is the whole box; level ``k`` (``1 <= k <= k2``) is a partition into
``L_k``-blocks, each refining its parent.  Because the box is a cube and the
splitting rule acts on each axis separately, every level is the product of one
1-d partition of ``[0, 2L]`` repeated over the axes.  Blocks of a level are
numbered row-major over their per-axis segment indices.

Goodness is constant on level-``k2`` blocks (leaves), so classification and
the bad set are computed at leaf granularity.  Linking edges are the explicit
(long-range) edges of the sample; implicit lattice edges never link blocks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from .errors import PreconditionError
from .metrics import bfs_distances, UNREACHABLE
from .model import ScaleSchedule
from .sampler import GraphSample


# --------------------------------------------------------------------------
# Partition
# --------------------------------------------------------------------------

def split_interval(length: int, target: int) -> list:
    """1-d split of a segment of ``length`` sites into pieces of size about ``target``.

    With ``n`` the integer satisfying ``n*target < length <= (n+1)*target``:
    if ``(n + 1/2) * target < length`` the pieces are ``n`` copies of
    ``target`` and the remainder; otherwise ``n - 1`` copies of ``target`` and
    two near-equal pieces (larger first) covering the rest.  A segment no
    longer than ``target`` is returned whole.
    """
    length, target = int(length), int(target)
    if target < 1:
        raise PreconditionError("target side must be >= 1")
    if length <= target:
        return [length]
    n = -(-length // target) - 1
    if (2 * n + 1) * target < 2 * length:
        return [target] * n + [length - n * target]
    rest = length - (n - 1) * target
    return [target] * (n - 1) + [rest - rest // 2, rest // 2]


@dataclass(frozen=True)
class Block:
    """Axis-aligned box given by its lower corner (0-based) and side lengths."""

    lo: tuple
    ext: tuple

    @property
    def hi(self) -> tuple:
        return tuple(a + e for a, e in zip(self.lo, self.ext))


def partition_block(lengths, target: int, lo=None) -> list:
    """Partition a box with the given side lengths into ``target``-blocks.

    Returns the sub-blocks in row-major order of their per-axis pieces.
    """
    lengths = [int(x) for x in np.atleast_1d(lengths)]
    if all(target >= x for x in lengths):
        raise PreconditionError(f"target {target} is not smaller than any side {lengths}")
    lo = [0] * len(lengths) if lo is None else list(lo)
    axes = []
    for start, length in zip(lo, lengths):
        pieces = split_interval(length, target)
        offs = np.concatenate([[0], np.cumsum(pieces)[:-1]]) + start
        axes.append(list(zip(offs.tolist(), pieces)))
    out = []
    for combo in np.ndindex(*[len(a) for a in axes]):
        out.append(Block(tuple(axes[i][j][0] for i, j in enumerate(combo)),
                         tuple(axes[i][j][1] for i, j in enumerate(combo))))
    return out


# --------------------------------------------------------------------------
# Block tree
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BlockTree:
    """Nested tiling of the box, levels ``0..k2``.

    ``cuts[k]`` are the segment boundaries of level ``k`` along any axis
    (0-based coordinates); ``parents[k][j]`` is the level ``k-1`` segment
    containing segment ``j`` of level ``k``.
    """

    d: int
    L: int
    scales: tuple
    cuts: tuple
    parents: tuple

    @property
    def k2(self) -> int:
        return len(self.cuts) - 1

    @property
    def side(self) -> int:
        return 2 * self.L + 1

    def n_segments(self, k: int) -> int:
        return len(self.cuts[k]) - 1

    def n_blocks(self, k: int) -> int:
        return self.n_segments(k) ** self.d

    def segment_sizes(self, k: int) -> np.ndarray:
        return np.diff(self.cuts[k])

    def block_extents(self, k: int):
        """``(lo, ext)`` arrays of shape ``(n_blocks, d)`` for level ``k``."""
        m = self.n_segments(k)
        idx = np.array(np.unravel_index(np.arange(m**self.d), (m,) * self.d)).T
        return self.cuts[k][idx], self.segment_sizes(k)[idx]

    def blocks(self, k: int) -> list:
        lo, ext = self.block_extents(k)
        return [Block(tuple(a.tolist()), tuple(e.tolist())) for a, e in zip(lo, ext)]

    def _flat(self, k: int, seg: np.ndarray) -> np.ndarray:
        m = self.n_segments(k)
        out = np.zeros(seg.shape[:-1], dtype=np.int64)
        for a in range(self.d):
            out = out * m + seg[..., a]
        return out

    def _unflat(self, k: int, ids) -> np.ndarray:
        m = self.n_segments(k)
        return np.stack(np.unravel_index(np.asarray(ids, dtype=np.int64), (m,) * self.d), axis=-1)

    def block_of_coords(self, k: int, coords0) -> np.ndarray:
        """Level-``k`` block ids of 0-based coordinates (shape ``(..., d)``)."""
        c = np.asarray(coords0, dtype=np.int64)
        seg = np.searchsorted(self.cuts[k], c, side="right") - 1
        return self._flat(k, seg)

    def block_of(self, k: int, vertices) -> np.ndarray:
        v = np.asarray(vertices, dtype=np.int64)
        strides = self.side ** np.arange(self.d - 1, -1, -1, dtype=np.int64)
        c = (v[..., None] // strides) % self.side
        return self.block_of_coords(k, c)

    def parent_of(self, k: int, ids) -> np.ndarray:
        """Level ``k-1`` block containing each level-``k`` block."""
        seg = self._unflat(k, ids)
        return self._flat(k - 1, self.parents[k][seg])

    def ancestors_of_leaves(self) -> list:
        """``anc[k][leaf]`` = level-``k`` block containing each leaf."""
        k2 = self.k2
        anc = [None] * (k2 + 1)
        anc[k2] = np.arange(self.n_blocks(k2), dtype=np.int64)
        seg = self._unflat(k2, anc[k2])
        for k in range(k2, 0, -1):
            seg = self.parents[k][seg]
            anc[k - 1] = self._flat(k - 1, seg)
        return anc

    def n_children(self, k: int) -> np.ndarray:
        """Children count of every level-``k`` block (``k < k2``)."""
        per_axis = np.bincount(self.parents[k + 1], minlength=self.n_segments(k))
        ids = self._unflat(k, np.arange(self.n_blocks(k)))
        return np.prod(per_axis[ids], axis=-1)

    def block_slices(self, k: int, b: int) -> tuple:
        seg = self._unflat(k, [b])[0]
        return tuple((int(self.cuts[k][s]), int(self.cuts[k][s + 1])) for s in seg)

    def to_dict(self) -> dict:
        return {"d": self.d, "L": self.L, "scales": list(self.scales),
                "segments_per_axis": [self.n_segments(k) for k in range(self.k2 + 1)],
                "segment_sizes": [sorted(set(self.segment_sizes(k).tolist()))
                                  for k in range(self.k2 + 1)]}


def build_block_tree(L: int, schedule: ScaleSchedule, d: Optional[int] = None) -> BlockTree:
    """Refine the box level by level with ``split_interval`` at scales ``L_1..L_k2``."""
    if schedule.k2 < 1:
        raise PreconditionError("schedule must have k2 >= 1")
    if not schedule.materialized:
        raise PreconditionError("schedule scales are too large to materialize")
    d = schedule.d if d is None else d
    if d is None:
        raise PreconditionError("dimension is required")
    side = 2 * int(L) + 1
    cuts = [np.array([0, side], dtype=np.int64)]
    parents = [np.zeros(0, dtype=np.int64)]
    scales = [side]
    for k in range(1, schedule.k2 + 1):
        target = int(schedule.scale(k))
        scales.append(target)
        prev = cuts[-1]
        new_cuts = [0]
        par = []
        for j in range(len(prev) - 1):
            pieces = split_interval(int(prev[j + 1] - prev[j]), target)
            for p in pieces:
                new_cuts.append(new_cuts[-1] + p)
                par.append(j)
        cuts.append(np.array(new_cuts, dtype=np.int64))
        parents.append(np.array(par, dtype=np.int64))
    return BlockTree(int(d), int(L), tuple(scales), tuple(cuts), tuple(parents))


# --------------------------------------------------------------------------
# Classification
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GoodnessLabels:
    """Good/bad flags per level and derived vertex goodness.

    ``good[k]`` (levels ``k1..k2``) and ``fraction_ok[k]`` / ``linked[k]``
    (conditions (2a)/(2b), levels ``k1..k2-1``) are boolean arrays over the
    blocks of that level.  ``G[k]`` for ``k < k1`` is the per-block flag that
    every two children are linked through good vertices; ``G_event[k]`` is
    its conjunction over the level.  ``leaf_good`` marks leaves whose sites are
    good vertices, and ``good_below[k]`` marks leaves contained only in good
    blocks of levels ``k..k2``.
    """

    tree: BlockTree
    k1: int
    k2: int
    delta: float
    good: dict
    fraction_ok: dict
    linked: dict
    G: dict
    good_below: dict
    warnings: tuple = ()

    @property
    def leaf_good(self) -> np.ndarray:
        return self.good_below[self.k1]

    @property
    def G_event(self) -> dict:
        return {k: bool(v.all()) for k, v in self.G.items()}

    @property
    def G_all(self) -> bool:
        return all(self.G_event.values())

    @property
    def F_L(self) -> bool:
        """All level-``k1`` blocks are good."""
        return bool(self.good[self.k1].all())

    def bad_count(self, k: int) -> int:
        return int((~self.good[k]).sum())

    def vertex_good(self, vertices) -> np.ndarray:
        return self.leaf_good[self.tree.block_of(self.k2, vertices)]

    def good_vertex_mask(self) -> np.ndarray:
        n = self.tree.side ** self.tree.d
        return self.vertex_good(np.arange(n, dtype=np.int64))

    def good_fraction(self, k: int) -> np.ndarray:
        """Per level-``k`` block, the fraction of sites good at levels ``k..k2``."""
        tree = self.tree
        leaf_lo, leaf_ext = tree.block_extents(self.k2)
        sizes = np.prod(leaf_ext, axis=1)
        anc = tree.ancestors_of_leaves()[k]
        tot = np.bincount(anc, weights=sizes, minlength=tree.n_blocks(k))
        good = np.bincount(anc, weights=sizes * self.good_below[k], minlength=tree.n_blocks(k))
        return good / tot

    @property
    def good_vertex_fraction(self) -> float:
        _, ext = self.tree.block_extents(self.k2)
        sizes = np.prod(ext, axis=1)
        return float((sizes * self.leaf_good).sum() / sizes.sum())

    def summary(self) -> dict:
        levels = {}
        for k in range(self.k1, self.k2 + 1):
            levels[k] = {"blocks": int(len(self.good[k])), "good": int(self.good[k].sum()),
                         "bad": self.bad_count(k), "scale": int(self.tree.scales[k])}
        return {"k1": self.k1, "k2": self.k2, "delta": self.delta, "levels": levels,
                "G": {k: v for k, v in self.G_event.items()}, "F_L": self.F_L,
                "good_vertex_fraction": self.good_vertex_fraction,
                "warnings": list(self.warnings)}


def _edge_levels(graph: GraphSample, tree: BlockTree, anc: list):
    """Leaves of both endpoints and the split level of every explicit edge.

    The split level is the deepest ``k`` whose level-``k`` block contains both
    endpoints; the edge then links two distinct level-``k+1`` blocks.
    """
    e = graph.long_edges
    lu = tree.block_of(tree.k2, e[:, 0])
    lw = tree.block_of(tree.k2, e[:, 1])
    split = np.zeros(len(e), dtype=np.int64)
    for k in range(1, tree.k2 + 1):
        same = anc[k][lu] == anc[k][lw]
        split[same] = k
    return lu, lw, split


def _pair_counts(parent: np.ndarray, a: np.ndarray, b: np.ndarray, n_parent: int) -> np.ndarray:
    """Number of distinct unordered child pairs ``{a, b}`` per parent block."""
    if len(a) == 0:
        return np.zeros(n_parent, dtype=np.int64)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    uniq = np.unique(np.stack([parent, lo, hi], axis=1), axis=0)
    return np.bincount(uniq[:, 0], minlength=n_parent)


def classify_blocks(graph: GraphSample, tree: BlockTree, schedule: ScaleSchedule) -> GoodnessLabels:
    """Bottom-up good/bad labelling from level ``k2`` to ``k1``, then the ``G_k`` flags."""
    if tree.side != graph.side or tree.d != graph.d:
        raise PreconditionError("block tree and graph live on different boxes")
    k1, k2, delta = schedule.k1, schedule.k2, schedule.delta
    if tree.k2 != k2:
        raise PreconditionError("block tree depth does not match the schedule")
    notes = list(schedule.warnings)
    anc = tree.ancestors_of_leaves()
    lu, lw, split = _edge_levels(graph, tree, anc)

    good = {k2: np.ones(tree.n_blocks(k2), dtype=bool)}
    fraction_ok, linked = {}, {}
    good_below = {k2: np.ones(tree.n_blocks(k2), dtype=bool)}
    gf = good_below[k2]
    for k in range(k2 - 1, k1 - 1, -1):
        nb = tree.n_blocks(k)
        child_parent = tree.parent_of(k + 1, np.arange(tree.n_blocks(k + 1)))
        n_child = np.bincount(child_parent, minlength=nb)
        g = np.bincount(child_parent, weights=good[k + 1], minlength=nb)
        frac = g >= (1.0 - delta) * n_child - 1e-9
        sel = (split == k) & gf[lu] & gf[lw]
        pairs = _pair_counts(anc[k][lu[sel]], anc[k + 1][lu[sel]], anc[k + 1][lw[sel]], nb)
        link = pairs == (g * (g - 1) / 2).astype(np.int64)
        fraction_ok[k], linked[k] = frac, link
        good[k] = frac & link
        gf = gf & good[k][anc[k]]
        good_below[k] = gf

    G = {}
    for k in range(0, k1):
        nb = tree.n_blocks(k)
        n_child = tree.n_children(k)
        sel = (split == k) & gf[lu] & gf[lw]
        pairs = _pair_counts(anc[k][lu[sel]], anc[k + 1][lu[sel]], anc[k + 1][lw[sel]], nb)
        G[k] = pairs == n_child * (n_child - 1) // 2
    if k1 == k2:
        notes.append("hierarchy has a single classified level; statistics are trivial")
    return GoodnessLabels(tree, k1, k2, float(delta), good, fraction_ok, linked, G,
                          good_below, tuple(notes))


# --------------------------------------------------------------------------
# Bad components
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BadComponents:
    """Lattice-connected components of the bad set.

    ``leaf_labels`` assigns each leaf block its component number (0 = good);
    ``diameters[i]`` is the sup-norm diameter of component ``i + 1``.
    """

    tree: BlockTree
    leaf_labels: np.ndarray
    diameters: np.ndarray
    sizes: np.ndarray
    m: dict

    @property
    def count(self) -> int:
        return len(self.diameters)

    @property
    def T_L(self) -> int:
        return int(self.diameters.max()) if len(self.diameters) else 0

    def component_of(self, vertices) -> np.ndarray:
        """Component number (0 for good vertices)."""
        return self.leaf_labels[self.tree.block_of(self.tree.k2, vertices)]

    def to_dict(self) -> dict:
        return {"T_L": self.T_L, "components": self.count,
                "diameters": [int(x) for x in self.diameters],
                "sizes": [int(x) for x in self.sizes],
                "m_k": {int(k): int(v) for k, v in self.m.items()}}


def bad_components(labels: GoodnessLabels, tree: Optional[BlockTree] = None) -> BadComponents:
    """Components of bad vertices under lattice adjacency, via the leaf grid."""
    tree = labels.tree if tree is None else tree
    k2 = labels.k2
    m = tree.n_segments(k2)
    bad = ~labels.leaf_good.reshape((m,) * tree.d)
    lab, count = ndimage.label(bad)
    cuts = tree.cuts[k2]
    diam, size = [], []
    _, ext = tree.block_extents(k2)
    leaf_sizes = np.prod(ext, axis=1)
    sizes = np.bincount(lab.reshape(-1), weights=leaf_sizes, minlength=count + 1)[1:]
    for sl in ndimage.find_objects(lab):
        span = max(int(cuts[s.stop] - cuts[s.start]) for s in sl)
        diam.append(span - 1)
    mk = {k: labels.bad_count(k) for k in range(labels.k1, k2 + 1)}
    return BadComponents(tree, lab.reshape(-1), np.array(diam, dtype=np.int64),
                         sizes.astype(np.int64), mk)


# --------------------------------------------------------------------------
# Restricted distance and path certificates
# --------------------------------------------------------------------------

def restricted_distance(graph: GraphSample, labels: GoodnessLabels, x: int, y: int) -> float:
    """Distance between good vertices in the graph induced on good vertices.

    Returns ``math.inf`` when ``y`` cannot be reached without bad vertices.
    """
    if not (labels.vertex_good([x])[0] and labels.vertex_good([y])[0]):
        raise PreconditionError("both endpoints must be good vertices")
    if x == y:
        return 0
    dist = bfs_distances(graph, x, allowed=labels.good_vertex_mask()).dist
    return math.inf if dist[y] == UNREACHABLE else int(dist[y])


@dataclass(frozen=True)
class FailureDiagnosis:
    """A required linking edge is absent."""

    x: int
    y: int
    level: int
    block_a: int
    block_b: int
    reason: str

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "level": self.level, "block_a": self.block_a,
                "block_b": self.block_b, "reason": self.reason}


@dataclass(frozen=True, eq=False)
class PathCertificate:
    """Explicit walk from ``x`` to ``y`` built by hierarchical linking.

    ``z`` maps binary labels to hierarchy vertices, ``long_edges`` lists the
    linking edges in walk order, ``connectors`` the lattice segments
    ``(start, end)`` inside single leaves, and ``walk`` the full vertex
    sequence.
    """

    x: int
    y: int
    z: dict
    long_edges: tuple
    connectors: tuple
    walk: np.ndarray
    bound_value: int

    @property
    def length(self) -> int:
        return len(self.walk) - 1

    def replay(self, graph: GraphSample) -> int:
        """Check every step is an edge of ``graph``; returns the hop count."""
        w = self.walk
        if w[0] != self.x or w[-1] != self.y:
            raise AssertionError("walk does not join the endpoints")
        if len(w) == 1:
            return 0
        a, b = w[:-1], w[1:]
        ca, cb = graph.coords(a), graph.coords(b)
        lattice = np.abs(ca - cb).sum(axis=-1) == 1
        if not graph.nn_implicit:
            lattice[:] = False
        need = ~lattice
        if need.any():
            lo, hi = np.minimum(a[need], b[need]), np.maximum(a[need], b[need])
            key = graph.long_edges[:, 0] * graph.n_vertices + graph.long_edges[:, 1]
            q = lo * graph.n_vertices + hi
            pos = np.searchsorted(key, q)
            ok = (pos < len(key)) & (key[np.minimum(pos, len(key) - 1)] == q)
            if not ok.all():
                bad = int(np.flatnonzero(need)[np.flatnonzero(~ok)[0]])
                raise AssertionError(f"step {bad} ({int(a[bad])}, {int(b[bad])}) is not an edge")
        return len(w) - 1

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "length": self.length, "bound": self.bound_value,
                "long_edges": [list(map(int, e)) for e in self.long_edges],
                "connectors": [list(map(int, c)) for c in self.connectors],
                "z": {k: int(v) for k, v in self.z.items()}}


class LinkIndex:
    """Lexicographically smallest linking edge between sibling blocks.

    Only explicit edges whose endpoints are both good vertices qualify.
    ``lookup(k, a, b)`` returns the edge oriented from block ``a`` to block
    ``b`` (level ``k + 1`` blocks inside one level-``k`` block), or None.
    """

    def __init__(self, graph: GraphSample, tree: BlockTree, labels: GoodnessLabels):
        self.graph, self.tree, self.labels = graph, tree, labels
        anc = tree.ancestors_of_leaves()
        lu, lw, split = _edge_levels(graph, tree, anc)
        ok = labels.leaf_good[lu] & labels.leaf_good[lw] & (split < tree.k2)
        self._maps = {}
        e = graph.long_edges
        for k in range(tree.k2):
            sel = np.flatnonzero(ok & (split == k))
            if len(sel) == 0:
                self._maps[k] = {}
                continue
            cu, cw = anc[k + 1][lu[sel]], anc[k + 1][lw[sel]]
            key = np.minimum(cu, cw) * tree.n_blocks(k + 1) + np.maximum(cu, cw)
            # edges are sorted, so the first occurrence of a key is the smallest edge
            _, first = np.unique(key, return_index=True)
            self._maps[k] = {int(key[i]): (int(e[sel[i], 0]), int(e[sel[i], 1])) for i in first}

    def lookup(self, k: int, a: int, b: int):
        nb = self.tree.n_blocks(k + 1)
        edge = self._maps[k].get(min(a, b) * nb + max(a, b))
        if edge is None:
            return None
        u, w = edge
        if int(self.tree.block_of(k + 1, [u])[0]) != a:
            u, w = w, u
        return u, w


def _lattice_walk(graph: GraphSample, a: int, b: int) -> list:
    """Axis-by-axis lattice path from ``a`` to ``b`` (stays in their bounding box)."""
    ca, cb = graph.coords(a), graph.coords(b)
    out = [int(a)]
    cur = int(a)
    for ax in range(graph.d):
        st = int(graph.strides[ax])
        step = 1 if cb[ax] > ca[ax] else -1
        for _ in range(abs(int(cb[ax] - ca[ax]))):
            cur += step * st
            out.append(cur)
    return out


def certificate_bound(schedule_or_tree, d: Optional[int] = None) -> int:
    """``2^k2 - 1 + 2^k2 * d * L_k2``."""
    if isinstance(schedule_or_tree, BlockTree):
        k2, Lk2, d = schedule_or_tree.k2, schedule_or_tree.scales[-1], schedule_or_tree.d
    else:
        k2, Lk2 = schedule_or_tree.k2, schedule_or_tree.scale(schedule_or_tree.k2)
        d = schedule_or_tree.d if d is None else d
        if d is None:
            raise PreconditionError("dimension is required")
    return 2**k2 - 1 + 2**k2 * d * int(Lk2)


def construct_path(graph: GraphSample, tree: BlockTree, labels: GoodnessLabels, x: int, y: int,
                   links: Optional[LinkIndex] = None):
    """Hierarchical walk between good vertices, or a ``FailureDiagnosis``.

    Segment ``t`` (a binary label) has endpoints ``z[t+'0'], z[t+'1']``.  If
    they fall in distinct level-``k+1`` blocks, the linking edge
    ``(z[t+'01'], z[t+'10'])`` between those blocks splits it into segments
    ``t+'0'`` and ``t+'1'`` (so ``z[t+'00'] = z[t+'0']`` and
    ``z[t+'11'] = z[t+'1']``); otherwise the segment descends unchanged as
    ``t+'0'``.  Segments reaching level ``k2`` are joined by lattice paths.
    """
    x, y = int(x), int(y)
    if not (labels.vertex_good([x])[0] and labels.vertex_good([y])[0]):
        raise PreconditionError("both endpoints must be good vertices")
    links = LinkIndex(graph, tree, labels) if links is None else links
    bound = certificate_bound(tree)
    z = {"0": x, "1": y}
    walk, long_edges, connectors = [], [], []

    def run(label, a, b, k):
        if k == tree.k2:
            seg = _lattice_walk(graph, a, b)
            connectors.append((a, b))
            if walk and walk[-1] == seg[0]:
                walk.extend(seg[1:])
            else:
                walk.extend(seg)
            return None
        A = int(tree.block_of(k + 1, [a])[0])
        B = int(tree.block_of(k + 1, [b])[0])
        if A == B:
            z[label + "00"], z[label + "01"] = a, b
            return run(label + "0", a, b, k + 1)
        edge = links.lookup(k, A, B)
        if edge is None:
            return FailureDiagnosis(x, y, k, A, B,
                                    f"no edge between good vertices links level-{k + 1} "
                                    f"blocks {A} and {B}")
        u, w = edge
        z[label + "00"], z[label + "01"] = a, u
        z[label + "10"], z[label + "11"] = w, b
        fail = run(label + "0", a, u, k + 1)
        if fail is not None:
            return fail
        long_edges.append((u, w))
        return run(label + "1", w, b, k + 1)

    if x == y:
        return PathCertificate(x, y, z, (), (), np.array([x], dtype=np.int64), bound)
    fail = run("", x, y, 0)
    if fail is not None:
        return fail
    return PathCertificate(x, y, z, tuple(long_edges), tuple(connectors),
                           np.array(walk, dtype=np.int64), bound)


def sample_good_pairs(labels: GoodnessLabels, n_pairs: int, rng=None) -> list:
    """Uniform pairs of distinct good vertices (empty if fewer than two exist)."""
    rng = np.random.default_rng(rng)
    good = np.flatnonzero(labels.good_vertex_mask())
    if len(good) < 2:
        return []
    out = []
    while len(out) < n_pairs:
        a, b = rng.choice(good, size=2, replace=False)
        out.append((int(a), int(b)))
    return out
