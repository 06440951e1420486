"""Exact sampling of the percolation graph on the box ``[-L, L]^d``.

Vertices are indexed row-major with the first coordinate most significant:
site ``x`` maps to ``sum_i (x_i + L) * n**(d-1-i)`` with ``n = 2L + 1``.

Sampling works per displacement class.  For each representative ``v`` of a
``+-`` pair (first nonzero coordinate positive) the number of vertex pairs at
displacement ``v`` inside the box is ``N_v = prod_i (n - |v_i|)``; a binomial
count ``K ~ Bin(N_v, p(v))`` is drawn and ``K`` of the ``N_v`` positions are
chosen uniformly without replacement.  Positions are ranked lexicographically
by the lower endpoint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np

from . import _kernels
from .errors import CapacityError, PreconditionError
from .model import ConnectivityKernel, ModelParams

DEFAULT_MAX_VERTICES = 200_000_000
DEFAULT_MAX_EDGES = 100_000_000
# Classes sharing one random substream.
CLASS_CHUNK = 1 << 16


# --------------------------------------------------------------------------
# Displacement classes
# --------------------------------------------------------------------------

def _full_cube(dim: int, M: int) -> np.ndarray:
    axes = [np.arange(-M, M + 1, dtype=np.int64)] * dim
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack(grid, axis=-1).reshape(-1, dim)


def _half_cube(dim: int, M: int) -> np.ndarray:
    """Vectors in ``[-M, M]^dim`` whose first nonzero entry is positive, lex-sorted."""
    if dim == 1:
        return np.arange(1, M + 1, dtype=np.int64)[:, None]
    parts = []
    lower = _half_cube(dim - 1, M)
    parts.append(np.hstack([np.zeros((len(lower), 1), dtype=np.int64), lower]))
    rest = _full_cube(dim - 1, M)
    for v0 in range(1, M + 1):
        parts.append(np.hstack([np.full((len(rest), 1), v0, dtype=np.int64), rest]))
    return np.vstack(parts)


def displacement_classes(d: int, L: int, include_unit: bool = False) -> np.ndarray:
    """Canonical representatives of all displacement classes meeting the box.

    Returned in lexicographic order; the row number is the class index.
    Unit vectors are dropped unless ``include_unit``.
    """
    reps = _half_cube(d, 2 * L)
    if not include_unit:
        reps = reps[np.abs(reps).sum(axis=1) != 1]
    return reps


def class_pair_counts(reps: np.ndarray, L: int) -> np.ndarray:
    """``N_v = prod_i (2L + 1 - |v_i|)`` for each representative."""
    return np.prod(2 * L + 1 - np.abs(reps), axis=1).astype(np.int64)


@lru_cache(maxsize=16)
def _cached_table(d: int, L: int, s: float, beta: float, nn_always: bool):
    reps = displacement_classes(d, L, include_unit=not nn_always)
    if len(reps) == 0:
        counts, probs = np.zeros(0, np.int64), np.zeros(0)
    else:
        counts = class_pair_counts(reps, L)
        probs = np.atleast_1d(ConnectivityKernel(d, s, beta, nn_always).p(reps))
    for a in (reps, counts, probs):
        a.setflags(write=False)
    return reps, counts, probs, math.fsum((counts * probs).tolist())


def _class_table(params: ModelParams):
    return _cached_table(params.d, params.L, params.s, params.beta, params.nn_always)


def expected_edge_count(params: ModelParams) -> float:
    """Expected number of explicitly sampled edges, by exhaustive class summation."""
    return _class_table(params)[3]


# --------------------------------------------------------------------------
# Graph sample
# --------------------------------------------------------------------------

def _check_canonical(edges: np.ndarray, n_vertices: int):
    if edges.ndim != 2 or edges.shape[1] != 2:
        raise PreconditionError(f"edge array must have shape (E, 2), got {edges.shape}")
    if len(edges) == 0:
        return
    u, w = edges[:, 0], edges[:, 1]
    if u.min() < 0 or w.max() >= n_vertices:
        raise PreconditionError("edge endpoint outside the box")
    if np.any(u >= w):
        raise PreconditionError("edges must be stored as (smaller, larger) without self-loops")
    du = np.diff(u)
    if np.any(du < 0) or np.any((du == 0) & (np.diff(w) <= 0)):
        raise PreconditionError("edges must be sorted lexicographically without duplicates")


@dataclass(frozen=True, eq=False)
class GraphSample:
    """Immutable sampled graph: implicit lattice edges plus an explicit edge list.

    ``long_edges`` is an ``(E, 2)`` int64 array of canonical pairs (smaller
    index first) in lexicographic order.  When ``nn_implicit`` is set, every
    lattice-adjacent pair is an edge and none of them is stored.
    """

    params: ModelParams
    long_edges: np.ndarray
    nn_implicit: bool = True

    def __post_init__(self):
        edges = np.ascontiguousarray(np.asarray(self.long_edges, dtype=np.int64).reshape(-1, 2))
        _check_canonical(edges, self.params.n_vertices)
        edges.setflags(write=False)
        object.__setattr__(self, "long_edges", edges)

    @classmethod
    def from_edges(cls, params: ModelParams, pairs, nn_implicit: Optional[bool] = None) -> "GraphSample":
        """Canonicalize an arbitrary collection of vertex pairs.

        Duplicates are merged; lattice-adjacent pairs are dropped when the
        lattice edges are implicit.
        """
        nn = params.nn_always if nn_implicit is None else nn_implicit
        arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if np.any(arr[:, 0] == arr[:, 1]):
            raise PreconditionError("self-loops are not allowed")
        arr = np.sort(arr, axis=1)
        if nn and len(arr):
            arr = arr[~_lattice_adjacent(arr[:, 0], arr[:, 1], params.d, params.side)]
        arr = np.unique(arr, axis=0) if len(arr) else arr
        return cls(params, arr, nn)

    # geometry -------------------------------------------------------------

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def L(self) -> int:
        return self.params.L

    @property
    def side(self) -> int:
        return self.params.side

    @property
    def n_vertices(self) -> int:
        return self.params.n_vertices

    @property
    def seed(self) -> int:
        return self.params.seed

    @property
    def n_long_edges(self) -> int:
        return len(self.long_edges)

    @cached_property
    def strides(self) -> np.ndarray:
        return self.side ** np.arange(self.d - 1, -1, -1, dtype=np.int64)

    def index(self, coords) -> np.ndarray:
        """Vertex index of site(s) with coordinates in ``[-L, L]``."""
        c = np.asarray(coords, dtype=np.int64)
        if np.any(np.abs(c) > self.L):
            raise PreconditionError("coordinates outside the box")
        out = ((c + self.L) * self.strides).sum(axis=-1)
        return out[()] if np.ndim(out) == 0 else out

    def coords(self, idx) -> np.ndarray:
        """Coordinates in ``[-L, L]^d`` of vertex index(es)."""
        i = np.asarray(idx, dtype=np.int64)
        return (i[..., None] // self.strides) % self.side - self.L

    @property
    def origin(self) -> int:
        return int(self.index(np.zeros(self.d, dtype=np.int64)))

    # adjacency ------------------------------------------------------------

    @cached_property
    def csr(self):
        """Symmetric CSR adjacency ``(indptr, indices)`` of the explicit edges."""
        e = self.long_edges
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        indices = np.ascontiguousarray(dst[order])
        indptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n_vertices), out=indptr[1:])
        return indptr, indices

    def long_neighbors(self, u: int) -> np.ndarray:
        indptr, indices = self.csr
        return indices[indptr[u]:indptr[u + 1]]

    def lattice_neighbors(self, u: int) -> np.ndarray:
        if not self.nn_implicit:
            return np.zeros(0, dtype=np.int64)
        c = self.coords(u)
        out = []
        for a in range(self.d):
            st = int(self.strides[a])
            if c[a] > -self.L:
                out.append(u - st)
            if c[a] < self.L:
                out.append(u + st)
        return np.array(sorted(out), dtype=np.int64)

    def neighbors(self, u: int) -> np.ndarray:
        return np.union1d(self.lattice_neighbors(u), self.long_neighbors(u))

    def has_edge(self, u: int, w: int) -> bool:
        if u == w:
            return False
        if self.nn_implicit and bool(_lattice_adjacent(np.array([u]), np.array([w]),
                                                      self.d, self.side)[0]):
            return True
        nb = self.long_neighbors(u)
        i = np.searchsorted(nb, w)
        return bool(i < len(nb) and nb[i] == w)

    def with_edges(self, extra) -> "GraphSample":
        """A new sample with additional explicit edges."""
        extra = np.asarray(extra, dtype=np.int64).reshape(-1, 2)
        return GraphSample.from_edges(self.params, np.vstack([self.long_edges, extra]),
                                      self.nn_implicit)

    def kernel_args(self):
        """Positional arguments shared by the compiled BFS kernels."""
        indptr, indices = self.csr
        return (self.side, self.d, self.nn_implicit, self.strides, indptr, indices)

    def __eq__(self, other):
        if not isinstance(other, GraphSample):
            return NotImplemented
        return (self.params == other.params and self.nn_implicit == other.nn_implicit
                and np.array_equal(self.long_edges, other.long_edges))

    __hash__ = None

    def __repr__(self):
        p = self.params
        return (f"GraphSample(d={p.d}, L={p.L}, s={p.s}, beta={p.beta}, seed={p.seed}, "
                f"long_edges={self.n_long_edges}, nn_implicit={self.nn_implicit})")


def _lattice_adjacent(u, w, d, n) -> np.ndarray:
    strides = n ** np.arange(d - 1, -1, -1, dtype=np.int64)
    cu = (np.asarray(u)[:, None] // strides) % n
    cw = (np.asarray(w)[:, None] // strides) % n
    return np.abs(cu - cw).sum(axis=1) == 1


# --------------------------------------------------------------------------
# Sampling
# --------------------------------------------------------------------------

def _substream(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def draw_class_counts(params: ModelParams):
    """Binomial edge counts per class: returns ``(reps, N_v, K_v, uniforms)``.

    ``uniforms`` holds the placement randomness, ``K_v`` values per class in
    class order.  Classes are grouped in chunks of ``CLASS_CHUNK`` sharing one
    substream keyed by the chunk number.
    """
    reps, counts, probs, _ = _class_table(params)
    K = np.zeros(len(reps), dtype=np.int64)
    uniforms = []
    for chunk, start in enumerate(range(0, len(reps), CLASS_CHUNK)):
        stop = min(start + CLASS_CHUNK, len(reps))
        rng = _substream(params.seed, chunk)
        k = rng.binomial(counts[start:stop], probs[start:stop])
        K[start:stop] = k
        uniforms.append(rng.random(int(k.sum())))
    u = np.concatenate(uniforms) if uniforms else np.zeros(0)
    return reps, counts, K, u


def sample_graph(params: ModelParams, *, max_vertices: int = DEFAULT_MAX_VERTICES,
                 max_edges: int = DEFAULT_MAX_EDGES) -> GraphSample:
    """Exact draw of the product Bernoulli measure, deterministic in ``params.seed``."""
    if params.n_vertices > max_vertices:
        raise CapacityError(f"{params.n_vertices} vertices exceed the budget of {max_vertices}")
    mean = expected_edge_count(params)
    if mean > max_edges:
        raise CapacityError(f"expected {mean:.3g} edges exceed the budget of {max_edges}")

    reps, counts, K, uniforms = draw_class_counts(params)
    offsets = np.zeros(len(K), dtype=np.int64)
    if len(K) > 1:
        np.cumsum(K[:-1], out=offsets[1:])
    ranks = _kernels.floyd_positions(counts, K, offsets, uniforms)
    cls = np.repeat(np.arange(len(K)), K)
    edges = place_edges(reps[cls], ranks, params.L)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    return GraphSample(params, edges[order], params.nn_always)


def place_edges(vecs: np.ndarray, ranks: np.ndarray, L: int) -> np.ndarray:
    """Map (displacement, position rank) to canonical vertex pairs.

    The rank enumerates the lower endpoints ``x`` with ``x, x + v`` in the box,
    in row-major order of ``x``.
    """
    n = 2 * L + 1
    d = vecs.shape[1] if vecs.ndim == 2 else 1
    vecs = vecs.reshape(-1, d)
    extents = n - np.abs(vecs)
    start = np.maximum(0, -vecs)
    r = np.asarray(ranks, dtype=np.int64).copy()
    lo = np.zeros(len(r), dtype=np.int64)
    hi = np.zeros(len(r), dtype=np.int64)
    stride = 1
    for a in range(d - 1, -1, -1):
        pos = r % extents[:, a] + start[:, a]
        r //= extents[:, a]
        lo += pos * stride
        hi += (pos + vecs[:, a]) * stride
        stride *= n
    return np.stack([lo, hi], axis=1)
