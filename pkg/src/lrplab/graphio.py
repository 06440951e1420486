"""Binary and text serialization of graph samples.

Binary layout (all integers little-endian), version 1::

    offset  size  field
    0       4     magic  b"LRPG"
    4       2     format version (u16)
    6       2     flags (u16), bit 0 = nearest-neighbour edges implicit
    8       4     d (u32)
    12      8     L (u64)
    20      8     s (f64)
    28      8     beta (f64)
    36      8     seed (u64)
    44      8     edge count E (u64)
    52      ...   payload: 2E unsigned LEB128 varints
    end-4   4     CRC-32 of every preceding byte (u32)

Edge ``i = (u_i, v_i)`` contributes two varints: ``u_i - u_{i-1}`` (with
``u_{-1} = 0``), then ``v_i - v_{i-1}`` if ``u_i == u_{i-1}`` else ``v_i - u_i``.
Both are nonnegative because the edge list is canonically sorted.

The text format is a header of ``#`` comment lines followed by one ``u v``
pair per line; see ``write_text``.
"""
from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import FormatError, IntegrityError, VersionMismatch
from .model import ModelParams
from .sampler import GraphSample

MAGIC = b"LRPG"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHIQddQQ")
_CRC = struct.Struct("<I")
TEXT_TAG = "# lrplab edge list v1"


def encode_varints(values: np.ndarray) -> bytes:
    """Unsigned LEB128 encoding of a nonnegative integer array."""
    x = np.asarray(values, dtype=np.uint64)
    if x.size == 0:
        return b""
    nbytes = np.ones(x.size, dtype=np.int64)
    rest = x >> np.uint64(7)
    while rest.any():
        nbytes += rest > 0
        rest >>= np.uint64(7)
    starts = np.zeros(x.size, dtype=np.int64)
    np.cumsum(nbytes[:-1], out=starts[1:])
    out = np.zeros(int(nbytes.sum()), dtype=np.uint8)
    for k in range(int(nbytes.max())):
        sel = nbytes > k
        chunk = (x[sel] >> np.uint64(7 * k)) & np.uint64(0x7F)
        cont = np.where(nbytes[sel] > k + 1, 0x80, 0).astype(np.uint64)
        out[starts[sel] + k] = (chunk | cont).astype(np.uint8)
    return out.tobytes()


def decode_varints(buf: bytes, count: int) -> tuple:
    """Decode exactly ``count`` varints; returns ``(values, bytes_consumed)``."""
    b = np.frombuffer(buf, dtype=np.uint8)
    if count == 0:
        return np.zeros(0, dtype=np.uint64), 0
    ends = np.flatnonzero(b < 0x80)
    if len(ends) < count:
        raise FormatError("truncated payload")
    ends = ends[:count]
    used = int(ends[-1]) + 1
    starts = np.concatenate([[0], ends[:-1] + 1])
    if np.any(ends - starts >= 10):
        raise FormatError("varint longer than 64 bits")
    b = b[:used].astype(np.uint64)
    group = np.repeat(np.arange(count), ends - starts + 1)
    shift = (np.arange(used) - starts[group]).astype(np.uint64) * np.uint64(7)
    vals = np.bitwise_or.reduceat((b & np.uint64(0x7F)) << shift, starts)
    return vals, used


def _edge_deltas(edges: np.ndarray) -> np.ndarray:
    u, v = edges[:, 0], edges[:, 1]
    prev_u = np.concatenate([[0], u[:-1]])
    prev_v = np.concatenate([[0], v[:-1]])
    du = u - prev_u
    same = du == 0
    same[0] = False
    dv = np.where(same, v - prev_v, v - u)
    return np.stack([du, dv], axis=1).reshape(-1)


def _undelta(vals: np.ndarray) -> np.ndarray:
    pairs = vals.astype(np.int64).reshape(-1, 2)
    du, dv = pairs[:, 0], pairs[:, 1]
    u = np.cumsum(du)
    # v restarts at u + dv whenever du > 0 (and at the first edge).
    restart = du != 0
    restart[0] = True
    base = np.where(restart, u + dv, 0)
    seg = np.cumsum(restart) - 1
    incr = np.where(restart, 0, dv)
    cum = np.cumsum(incr)
    seg_start = np.flatnonzero(restart)
    v = base[seg_start][seg] + cum - cum[seg_start][seg]
    return np.stack([u, v], axis=1)


def serialize(graph: GraphSample) -> bytes:
    p = graph.params
    E = graph.n_long_edges
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, 1 if graph.nn_implicit else 0,
                          p.d, p.L, p.s, p.beta, p.seed, E)
    payload = encode_varints(_edge_deltas(graph.long_edges)) if E else b""
    body = header + payload
    return body + _CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


def deserialize(data: bytes) -> GraphSample:
    data = bytes(data)
    if len(data) < _HEADER.size + _CRC.size:
        raise FormatError("truncated header")
    magic, version, flags, d, L, s, beta, seed, E = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError("not an lrplab graph file (bad magic)")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"format version {version}, expected {FORMAT_VERSION}")
    body, (crc,) = data[:-_CRC.size], _CRC.unpack_from(data, len(data) - _CRC.size)
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise IntegrityError("checksum mismatch")
    vals, used = decode_varints(body[_HEADER.size:], 2 * E)
    if _HEADER.size + used != len(body):
        raise FormatError("trailing bytes after payload")
    params = ModelParams(d=d, s=s, beta=beta, L=L, seed=seed, nn_always=bool(flags & 1))
    edges = _undelta(vals) if E else np.zeros((0, 2), dtype=np.int64)
    return GraphSample(params, edges, bool(flags & 1))


def write_binary(graph: GraphSample, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(graph))


def read_binary(path) -> GraphSample:
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def write_text(graph: GraphSample, path) -> None:
    p = graph.params
    with open(path, "w") as fh:
        fh.write(TEXT_TAG + "\n")
        fh.write(f"# d={p.d} L={p.L} s={p.s!r} beta={p.beta!r} seed={p.seed} "
                 f"nn_implicit={int(graph.nn_implicit)} edges={graph.n_long_edges}\n")
        if graph.n_long_edges:
            np.savetxt(fh, graph.long_edges, fmt="%d")


def read_text(path) -> GraphSample:
    meta = {}
    with open(path) as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
        elif line.strip():
            body.append(line.split())
    try:
        nn = bool(int(meta["nn_implicit"]))
        params = ModelParams(d=int(meta["d"]), s=float(meta["s"]), beta=float(meta["beta"]),
                             L=int(meta["L"]), seed=int(meta["seed"]), nn_always=nn)
        edges = np.array(body, dtype=np.int64).reshape(-1, 2)
    except (KeyError, ValueError) as exc:
        raise FormatError(f"malformed edge list: {exc}") from exc
    if "edges" in meta and int(meta["edges"]) != len(edges):
        raise FormatError("edge count in header does not match body")
    return GraphSample(params, edges, nn)


def save_graph(graph: GraphSample, path) -> None:
    """Write by extension: ``.txt`` gives the text format, anything else binary."""
    if str(path).endswith(".txt"):
        write_text(graph, path)
    else:
        write_binary(graph, path)


def load_graph(path) -> GraphSample:
    if str(path).endswith(".txt"):
        return read_text(path)
    return read_binary(path)
