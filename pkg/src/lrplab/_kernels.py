"""Compiled inner loops: Floyd subset selection and lattice-plus-edges BFS.

Vertices are row-major indices into the box of side ``n`` in ``d``
dimensions; lattice neighbours are generated on the fly from the strides,
long edges come from a CSR adjacency (``indptr``, ``indices``).
"""
import numpy as np
from numba import njit

UNREACHED = -1


@njit(cache=True)
def floyd_positions(N, K, offsets, uniforms):
    """Uniform K-subsets of ``range(N[c])`` for every class ``c`` (Floyd's algorithm).

    ``uniforms[offsets[c] : offsets[c] + K[c]]`` drive class ``c``.  Output
    positions are written in the same slots.
    """
    out = np.empty(uniforms.shape[0], dtype=np.int64)
    for c in range(N.shape[0]):
        k = K[c]
        if k == 0:
            continue
        n = N[c]
        base = offsets[c]
        if k <= 64:
            filled = 0
            for j in range(n - k, n):
                t = np.int64(uniforms[base + filled] * (j + 1))
                if t > j:
                    t = j
                dup = False
                for i in range(filled):
                    if out[base + i] == t:
                        dup = True
                        break
                out[base + filled] = j if dup else t
                filled += 1
        else:
            chosen = {np.int64(-1)}
            filled = 0
            for j in range(n - k, n):
                t = np.int64(uniforms[base + filled] * (j + 1))
                if t > j:
                    t = j
                if t in chosen:
                    t = j
                chosen.add(t)
                out[base + filled] = t
                filled += 1
    return out


@njit(cache=True)
def _bfs_into(n, d, nn, strides, indptr, indices, source, mask, use_mask,
              max_depth, target, dist, queue):
    """Fill ``dist`` (pre-set to UNREACHED) from ``source``; return visit count."""
    head = 0
    tail = 0
    dist[source] = 0
    queue[tail] = source
    tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u]
        if u == target:
            break
        if max_depth >= 0 and du >= max_depth:
            continue
        if nn:
            for a in range(d):
                st = strides[a]
                c = (u // st) % n
                if c > 0:
                    w = u - st
                    if dist[w] == UNREACHED and (not use_mask or mask[w]):
                        dist[w] = du + 1
                        queue[tail] = w
                        tail += 1
                if c < n - 1:
                    w = u + st
                    if dist[w] == UNREACHED and (not use_mask or mask[w]):
                        dist[w] = du + 1
                        queue[tail] = w
                        tail += 1
        for e in range(indptr[u], indptr[u + 1]):
            w = indices[e]
            if dist[w] == UNREACHED and (not use_mask or mask[w]):
                dist[w] = du + 1
                queue[tail] = w
                tail += 1
    return tail


@njit(cache=True)
def bfs(n, d, nn, strides, indptr, indices, source, mask, use_mask, max_depth, target):
    nv = n**d
    dist = np.full(nv, UNREACHED, dtype=np.int32)
    queue = np.empty(nv, dtype=np.int64)
    _bfs_into(n, d, nn, strides, indptr, indices, source, mask, use_mask,
              max_depth, target, dist, queue)
    return dist


@njit(cache=True)
def eccentricities(n, d, nn, strides, indptr, indices, sources):
    """Eccentricity and one farthest vertex for every source (-1 if disconnected)."""
    nv = n**d
    dist = np.full(nv, UNREACHED, dtype=np.int32)
    queue = np.empty(nv, dtype=np.int64)
    mask = np.empty(0, dtype=np.uint8)
    ecc = np.empty(sources.shape[0], dtype=np.int64)
    far = np.empty(sources.shape[0], dtype=np.int64)
    for i in range(sources.shape[0]):
        cnt = _bfs_into(n, d, nn, strides, indptr, indices, sources[i], mask, False,
                        -1, -1, dist, queue)
        last = queue[cnt - 1]
        if cnt < nv:
            ecc[i] = -1
        else:
            ecc[i] = dist[last]
        far[i] = last
        for j in range(cnt):
            dist[queue[j]] = UNREACHED
    return ecc, far


@njit(cache=True)
def pair_distances(n, d, nn, strides, indptr, indices, xs, ys):
    """Graph distance for each ``(xs[i], ys[i])`` with early exit at the target."""
    nv = n**d
    dist = np.full(nv, UNREACHED, dtype=np.int32)
    queue = np.empty(nv, dtype=np.int64)
    mask = np.empty(0, dtype=np.uint8)
    out = np.empty(xs.shape[0], dtype=np.int64)
    for i in range(xs.shape[0]):
        cnt = _bfs_into(n, d, nn, strides, indptr, indices, xs[i], mask, False,
                        -1, ys[i], dist, queue)
        out[i] = dist[ys[i]]
        for j in range(cnt):
            dist[queue[j]] = UNREACHED
    return out


@njit(cache=True)
def within_depth(n, d, nn, strides, indptr, indices, source, targets, max_depth):
    """Distances from ``source`` to ``targets``, exploring at most ``max_depth`` hops."""
    nv = n**d
    dist = np.full(nv, UNREACHED, dtype=np.int32)
    queue = np.empty(nv, dtype=np.int64)
    mask = np.empty(0, dtype=np.uint8)
    _bfs_into(n, d, nn, strides, indptr, indices, source, mask, False,
              max_depth, -1, dist, queue)
    out = np.empty(targets.shape[0], dtype=np.int64)
    for i in range(targets.shape[0]):
        out[i] = dist[targets[i]]
    return out


@njit(cache=True)
def eccentricities_bitparallel(n, d, nn, strides, indptr, indices, sources, words):
    """Eccentricities of many sources at once, ``64 * words`` per sweep.

    Each vertex carries a bitset of the sources that have reached it; one
    level of all those BFS runs is a single pull sweep over the vertices.
    Assumes a connected graph.
    """
    nv = n**d
    m = sources.shape[0]
    ecc = np.zeros(m, dtype=np.int64)
    batch = 64 * words
    visited = np.zeros((nv, words), dtype=np.uint64)
    frontier = np.zeros((nv, words), dtype=np.uint64)
    nxt = np.zeros((nv, words), dtype=np.uint64)
    acc = np.zeros(words, dtype=np.uint64)
    full = np.zeros(words, dtype=np.uint64)
    grow = np.zeros(words, dtype=np.uint64)
    one = np.uint64(1)
    for b0 in range(0, m, batch):
        b1 = min(m, b0 + batch)
        visited[:, :] = 0
        frontier[:, :] = 0
        full[:] = 0
        for j in range(b0, b1):
            k = j - b0
            bit = one << np.uint64(k % 64)
            visited[sources[j], k // 64] |= bit
            frontier[sources[j], k // 64] |= bit
            full[k // 64] |= bit
        level = 0
        while True:
            level += 1
            grow[:] = 0
            for v in range(nv):
                done = True
                for w in range(words):
                    if visited[v, w] != full[w]:
                        done = False
                        break
                if done:
                    for w in range(words):
                        nxt[v, w] = 0
                    continue
                acc[:] = 0
                if nn:
                    for a in range(d):
                        st = strides[a]
                        c = (v // st) % n
                        if c > 0:
                            for w in range(words):
                                acc[w] |= frontier[v - st, w]
                        if c < n - 1:
                            for w in range(words):
                                acc[w] |= frontier[v + st, w]
                for e in range(indptr[v], indptr[v + 1]):
                    u = indices[e]
                    for w in range(words):
                        acc[w] |= frontier[u, w]
                for w in range(words):
                    new = acc[w] & ~visited[v, w]
                    nxt[v, w] = new
                    visited[v, w] |= new
                    grow[w] |= new
            anyg = False
            for w in range(words):
                if grow[w] != 0:
                    anyg = True
            if not anyg:
                break
            for j in range(b0, b1):
                k = j - b0
                if (grow[k // 64] >> np.uint64(k % 64)) & one:
                    ecc[j] = level
            frontier, nxt = nxt, frontier
    return ecc


@njit(cache=True)
def cover_balls(n, d, nn, strides, indptr, indices, sources, radii, covered):
    """Set ``covered[v] = 1`` for every ``v`` within ``radii[i]`` hops of ``sources[i]``."""
    nv = n**d
    dist = np.full(nv, UNREACHED, dtype=np.int32)
    queue = np.empty(nv, dtype=np.int64)
    mask = np.empty(0, dtype=np.uint8)
    for i in range(sources.shape[0]):
        if radii[i] < 0:
            continue
        cnt = _bfs_into(n, d, nn, strides, indptr, indices, sources[i], mask, False,
                        radii[i], -1, dist, queue)
        for j in range(cnt):
            covered[queue[j]] = 1
            dist[queue[j]] = UNREACHED
