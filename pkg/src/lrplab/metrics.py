"""Graph distances: BFS fields, intrinsic-ball growth and exact diameter."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import PreconditionError
from .sampler import GraphSample

UNREACHABLE = _kernels.UNREACHED
ALLPAIRS_THRESHOLD = 2000
_EMPTY_MASK = np.zeros(0, dtype=np.uint8)


@dataclass(frozen=True)
class DistanceField:
    """Hop counts from ``source``; unreachable vertices hold ``UNREACHABLE`` (-1)."""

    source: int
    dist: np.ndarray

    def __getitem__(self, v) -> float:
        x = int(self.dist[v])
        return float("inf") if x == UNREACHABLE else x

    @property
    def eccentricity(self) -> float:
        if np.any(self.dist == UNREACHABLE):
            return float("inf")
        return int(self.dist.max())

    def as_float(self) -> np.ndarray:
        out = self.dist.astype(np.float64)
        out[self.dist == UNREACHABLE] = np.inf
        return out


@dataclass(frozen=True)
class BallCurve:
    """``values[r] = |B(source, r)|`` for ``r = 0..r_max``.

    ``boundary_radius`` is the smallest ``r`` whose ball contains a site on the
    boundary of the box (None if no boundary site is reachable).
    """

    source: int
    values: np.ndarray
    boundary_radius: Optional[int]

    @property
    def r_max(self) -> int:
        return len(self.values) - 1

    def uncensored(self, r_min: int = 0):
        """``(r, |B(r)|)`` pairs with ``r_min <= r < boundary_radius``."""
        stop = len(self.values) if self.boundary_radius is None else min(len(self.values), self.boundary_radius)
        r = np.arange(r_min, stop)
        return r, self.values[r_min:stop]

    def to_dict(self) -> dict:
        return {"source": int(self.source), "boundary_radius": self.boundary_radius,
                "values": [int(v) for v in self.values]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "ball_size", "censored"])
        for r, v in enumerate(self.values):
            cens = self.boundary_radius is not None and r >= self.boundary_radius
            w.writerow([r, int(v), int(cens)])
        return buf.getvalue()


@dataclass(frozen=True)
class DiameterResult:
    """Diameter value with provenance.

    For ``method == "lower-bound-sweep"`` the exact value is only known to
    lie in ``[lower, upper]`` and ``value`` equals ``lower``.
    """

    value: int
    method: str
    bfs_count: int
    witness: tuple
    lower: int = 0
    upper: int = 0

    @property
    def exact(self) -> bool:
        return self.method != "lower-bound-sweep"

    def to_dict(self) -> dict:
        return {"value": int(self.value), "method": self.method, "bfs_count": int(self.bfs_count),
                "witness": [int(w) for w in self.witness], "lower": int(self.lower),
                "upper": int(self.upper)}


def _check_vertex(graph: GraphSample, v) -> int:
    v = int(v)
    if not 0 <= v < graph.n_vertices:
        raise PreconditionError(f"vertex {v} outside the box")
    return v


def bfs_distances(graph: GraphSample, source: int, allowed: Optional[np.ndarray] = None,
                  max_depth: int = -1) -> DistanceField:
    """Single-source hop counts over lattice plus explicit edges.

    ``allowed`` optionally restricts the search to a vertex subset (boolean
    mask); ``max_depth`` stops exploring beyond that distance.
    """
    source = _check_vertex(graph, source)
    if allowed is None:
        mask, use = _EMPTY_MASK, False
    else:
        mask = np.ascontiguousarray(allowed, dtype=np.uint8)
        if not mask[source]:
            raise PreconditionError("source is not in the allowed vertex set")
        use = True
    dist = _kernels.bfs(*graph.kernel_args(), source, mask, use, max_depth, -1)
    return DistanceField(source, dist)


def graph_distance(graph: GraphSample, x: int, y: int) -> float:
    xs = np.array([_check_vertex(graph, x)], dtype=np.int64)
    ys = np.array([_check_vertex(graph, y)], dtype=np.int64)
    d = int(_kernels.pair_distances(*graph.kernel_args(), xs, ys)[0])
    return float("inf") if d == UNREACHABLE else d


def boundary_mask(graph: GraphSample) -> np.ndarray:
    """Boolean mask of sites with some coordinate equal to ``-L`` or ``L``."""
    idx = np.arange(graph.n_vertices, dtype=np.int64)
    out = np.zeros(graph.n_vertices, dtype=bool)
    for st in graph.strides:
        c = (idx // st) % graph.side
        out |= (c == 0) | (c == graph.side - 1)
    return out


def ball_growth(graph: GraphSample, source: int, r_max: int) -> BallCurve:
    if r_max < 0:
        raise PreconditionError("r_max must be >= 0")
    field_ = bfs_distances(graph, source)
    dist = field_.dist
    reach = dist[dist != UNREACHABLE]
    counts = np.bincount(np.minimum(reach, r_max + 1), minlength=r_max + 2)[: r_max + 1]
    values = np.cumsum(counts).astype(np.int64)
    bd = dist[boundary_mask(graph)]
    bd = bd[bd != UNREACHABLE]
    boundary = int(bd.min()) if len(bd) else None
    return BallCurve(field_.source, values, boundary)


def eccentricities(graph: GraphSample, sources) -> tuple:
    """``(ecc, farthest)`` arrays; ``ecc = -1`` when the graph is disconnected."""
    src = np.ascontiguousarray(sources, dtype=np.int64)
    return _kernels.eccentricities(*graph.kernel_args(), src)


def _allpairs(graph: GraphSample) -> DiameterResult:
    n = graph.n_vertices
    ecc, far = eccentricities(graph, np.arange(n))
    if np.any(ecc < 0):
        raise PreconditionError("graph is disconnected; diameter is infinite")
    i = int(np.argmax(ecc))
    v = int(ecc[i])
    return DiameterResult(v, "exact-allpairs", n, (i, int(far[i])), v, v)


def _path_midpoint(graph: GraphSample, dist: np.ndarray, end: int) -> int:
    """Walk a shortest path back from ``end`` to the vertex halfway from the source."""
    target = int(dist[end]) // 2
    cur = end
    while dist[cur] > target:
        nb = graph.neighbors(cur)
        cur = int(nb[dist[nb] == dist[cur] - 1][0])
    return cur


def diameter_exact(graph: GraphSample, *, allpairs_threshold: int = ALLPAIRS_THRESHOLD,
                   max_bfs: Optional[int] = None, strategy: str = "bounds",
                   batch: int = 64) -> DiameterResult:
    """Exact diameter by eccentricity-bounding search, or all-pairs BFS for small graphs.

    Root: a double sweep from vertex 0 (a box corner) finds a long path
    ``a -> b`` and its midpoint becomes the root.  Then either

    * ``strategy="fringe"``: iFUB proper, refuting the upper bound ``2(i-1)``
      level by level from the top fringe of the root's BFS tree, or
    * ``strategy="bounds"``: per-vertex bounds ``ecc(v) <= D(v, w) + ecc(w)``
      and ``ecc(v) >= max(D(v, w), ecc(w) - D(v, w))`` from every BFS source
      ``w``; sources alternate between the candidate with the largest upper
      bound and the one with the smallest lower bound, and a vertex is retired
      once its upper bound is at most the best diameter found.

    Both are exact.  When the BFS budget ``max_bfs`` runs out, the certified
    interval is returned with method ``lower-bound-sweep``.
    """
    if graph.n_vertices <= allpairs_threshold:
        return _allpairs(graph)
    if strategy not in ("bounds", "fringe"):
        raise PreconditionError(f"unknown diameter strategy {strategy!r}")

    d0 = bfs_distances(graph, 0).dist
    if np.any(d0 == UNREACHABLE):
        raise PreconditionError("graph is disconnected; diameter is infinite")
    a = int(np.argmax(d0))
    da = bfs_distances(graph, a).dist
    b = int(np.argmax(da))
    lb, witness = int(da[b]), (a, b)
    root = _path_midpoint(graph, da, b)
    dr = bfs_distances(graph, root).dist
    ecc_r = int(dr.max())
    if ecc_r > lb:
        lb, witness = ecc_r, (root, int(np.argmax(dr)))
    state = (lb, witness, 3)
    if strategy == "fringe":
        return _fringe_search(graph, dr, state, max_bfs, batch)
    return _bounds_search(graph, [(a, da), (b, None), (root, dr)], state, max_bfs)


def _fringe_search(graph, dr, state, max_bfs, batch) -> DiameterResult:
    lb, witness, count = state
    ecc_r = int(dr.max())
    ub = 2 * ecc_r
    order = np.argsort(dr, kind="stable")
    level_start = np.searchsorted(dr[order], np.arange(ecc_r + 2))
    i = ecc_r
    while ub > lb and i > 0:
        fringe = order[level_start[i]:level_start[i + 1]]
        for s in range(0, len(fringe), batch):
            chunk = fringe[s:s + batch]
            if max_bfs is not None and count + len(chunk) > max_bfs:
                return DiameterResult(lb, "lower-bound-sweep", count, witness, lb, ub)
            ecc, far = eccentricities(graph, chunk)
            count += len(chunk)
            j = int(np.argmax(ecc))
            if ecc[j] > lb:
                lb, witness = int(ecc[j]), (int(chunk[j]), int(far[j]))
        if lb > 2 * (i - 1):
            break
        ub = 2 * (i - 1)
        i -= 1
    return DiameterResult(lb, "exact-ifub", count, witness, lb, lb)


# Phase 1 of the bounds search stops once a single-source probe retires
# fewer candidates than this on average (tuned on d=1 samples up to L=2^18).
_PROBE_MIN_YIELD = 256


def _bounds_search(graph, seeds, state, max_bfs, words=8) -> DiameterResult:
    lb, witness, count = state
    n = graph.n_vertices
    big = np.iinfo(np.int64).max // 4
    lo = np.zeros(n, dtype=np.int64)
    up = np.full(n, big, dtype=np.int64)
    cand = np.ones(n, dtype=bool)

    def absorb(w, dist):
        nonlocal lb, witness
        dist = dist.astype(np.int64)
        e = int(dist.max())
        if e > lb:
            lb, witness = e, (int(w), int(np.argmax(dist)))
        np.minimum(up, dist + e, out=up)
        np.maximum(lo, np.maximum(dist, e - dist), out=lo)
        cand[w] = False

    def interval():
        return DiameterResult(lb, "lower-bound-sweep", count, witness, lb,
                              int(max(lb, up[cand].max())))

    for w, dist in seeds:
        if dist is None:
            dist = bfs_distances(graph, w).dist
        absorb(w, dist)
    cand &= up > lb
    # Phase 1: single-source sweeps while each retires enough candidates.
    pick_high = True
    window = []
    while cand.any():
        if len(window) >= 8 and sum(window[-8:]) < 8 * _PROBE_MIN_YIELD:
            break
        before = int(cand.sum())
        if max_bfs is not None and count >= max_bfs:
            return interval()
        if pick_high:
            w = int(np.argmax(np.where(cand, up, -1)))
        else:
            w = int(np.argmin(np.where(cand, lo, big)))
        pick_high = not pick_high
        absorb(w, bfs_distances(graph, w).dist)
        count += 1
        cand &= up > lb
        window.append(before - int(cand.sum()))
    # Phase 2: exact eccentricities of spread-out candidates, bit-parallel.
    # A vertex w of eccentricity e certifies its whole (lb - e)-ball.
    block = 64 * words
    covered = np.zeros(n, dtype=np.uint8)
    while cand.any():
        rest = np.flatnonzero(cand)
        rest = rest[:: max(1, len(rest) // block)][:block]
        if max_bfs is not None and count + len(rest) > max_bfs:
            return interval()
        w_used = min(words, -(-len(rest) // 64))
        ecc = _kernels.eccentricities_bitparallel(*graph.kernel_args(), rest, w_used)
        count += len(rest)
        cand[rest] = False
        j = int(np.argmax(ecc))
        if ecc[j] > lb:
            dist = bfs_distances(graph, int(rest[j])).dist
            lb, witness = int(ecc[j]), (int(rest[j]), int(np.argmax(dist)))
        radii = lb - ecc
        keep = radii > 0
        _kernels.cover_balls(*graph.kernel_args(), rest[keep], radii[keep], covered)
        cand &= (up > lb) & (covered == 0)
    return DiameterResult(lb, "exact-ifub", count, witness, lb, lb)


def typical_distance_sample(graph: GraphSample, n_pairs: int, rng=None, *,
                            min_sep: Optional[int] = None, max_sep: Optional[int] = None):
    """Uniform vertex pairs with their exact graph distances.

    Optional ``min_sep``/``max_sep`` restrict the sup-norm separation of the
    pair (by rejection).  Returns a list of ``(x, y, D(x, y))``.
    """
    if n_pairs < 1:
        raise PreconditionError("n_pairs must be >= 1")
    rng = np.random.default_rng(rng)
    n = graph.n_vertices
    xs, ys = [], []
    needed = n_pairs
    tries = 0
    while needed > 0:
        m = max(4 * needed, 64)
        x = rng.integers(0, n, size=m)
        y = rng.integers(0, n, size=m)
        if min_sep is not None or max_sep is not None:
            sep = np.abs(graph.coords(x) - graph.coords(y)).max(axis=-1)
            ok = np.ones(m, dtype=bool)
            if min_sep is not None:
                ok &= sep >= min_sep
            if max_sep is not None:
                ok &= sep <= max_sep
            x, y = x[ok], y[ok]
        xs.append(x[:needed])
        ys.append(y[:needed])
        needed -= len(xs[-1])
        tries += 1
        if tries > 1000:
            raise PreconditionError("separation window admits (almost) no vertex pairs")
    xs = np.concatenate(xs)
    ys = np.concatenate(ys)
    dist = _kernels.pair_distances(*graph.kernel_args(), xs, ys)
    return [(int(a), int(b), float("inf") if c == UNREACHABLE else int(c))
            for a, b, c in zip(xs, ys, dist)]
