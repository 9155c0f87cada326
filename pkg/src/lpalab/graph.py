"""Erdős–Rényi sampling and a compressed sorted-neighbor graph layout.

Vertices are 1-indexed at every public entry point (v_1 .. v_n). Internally
the adjacency is stored 0-based: ``nbr[off[i]:off[i+1]]`` holds the neighbors
of v_{i+1}, strictly ascending.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numba as nb
import numpy as np

from ._rng import new_state, nb_uniform
from .errors import CapacityError, ParameterError

DEFAULT_EDGE_CAP = 200_000_000
MAGIC = b"LPAG"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class GnpParams:
    n: int
    p: float
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        if not (0.0 <= self.p <= 1.0) or math.isnan(self.p):
            raise ParameterError(f"p must lie in [0, 1], got {self.p}")
        if not (0 <= self.seed < 2**64):
            raise ParameterError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    m: int
    off: np.ndarray = field(repr=False)
    nbr: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.off.setflags(write=False)
        self.nbr.setflags(write=False)

    def degree(self, v: int) -> int:
        return degree(self, v)

    def neighbors(self, v: int) -> np.ndarray:
        """Ascending 1-based neighbors of v."""
        _check_vertex(self, v)
        return self.nbr[self.off[v - 1] : self.off[v]].astype(np.int64) + 1

    def degrees(self) -> np.ndarray:
        return np.diff(self.off)

    def edges(self) -> np.ndarray:
        """All edges as an (m, 2) array of 1-based pairs (u < v), lexicographically sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.off))
        dst = self.nbr.astype(np.int64)
        keep = src < dst
        return np.stack([src[keep] + 1, dst[keep] + 1], axis=1)

    def to_bytes(self) -> bytes:
        head = MAGIC + struct.pack("<IQQ", FORMAT_VERSION, self.n, self.m)
        return (
            head
            + self.off.astype("<u8").tobytes()
            + self.nbr.astype("<u4").tobytes()
        )

    @classmethod
    def from_bytes(cls, buf: bytes) -> "Graph":
        if buf[:4] != MAGIC:
            raise ValueError("not a serialized graph (bad magic)")
        version, n, m = struct.unpack_from("<IQQ", buf, 4)
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported graph format version {version}")
        pos = 4 + struct.calcsize("<IQQ")
        off = np.frombuffer(buf, dtype="<u8", count=n + 1, offset=pos).astype(np.int64)
        pos += 8 * (n + 1)
        nbr = np.frombuffer(buf, dtype="<u4", count=2 * m, offset=pos).astype(np.int32)
        return cls(n=n, m=m, off=off, nbr=nbr)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Graph":
        return cls.from_bytes(Path(path).read_bytes())


def _check_vertex(g: Graph, v: int) -> None:
    if not (1 <= v <= g.n):
        raise ParameterError(f"vertex {v} outside [1, {g.n}]")


def degree(graph: Graph, v: int) -> int:
    _check_vertex(graph, v)
    return int(graph.off[v] - graph.off[v - 1])


# construction ---------------------------------------------------------------


@nb.njit(nogil=True, cache=True, fastmath=True)
def _skip_sample_lower(n, p, seed_state, cap):
    # Batagelj-Brandes walk over pairs (w, v), w < v, ordered by v then w.
    # Output is the lower-neighbor CSR body plus per-vertex lower degrees.
    inv_lp = 1.0 / math.log1p(-p)
    low = np.empty(cap, dtype=np.int32)
    lowdeg = np.zeros(n, dtype=np.int64)
    m = 0
    v = 1
    w = -1
    pairs = 0.5 * n * (n - 1)
    while v < n:
        r = nb_uniform(seed_state)
        skip = math.log(1.0 - r) * inv_lp
        if skip >= pairs:
            # jumps past every remaining pair (and would overflow the integer cast)
            break
        w += 1 + np.int64(skip)
        while w >= v and v < n:
            w -= v
            v += 1
        if v < n:
            if m == cap:
                return low, lowdeg, -1
            low[m] = w
            lowdeg[v] += 1
            m += 1
    return low, lowdeg, m


@nb.njit(nogil=True, cache=True)
def _lower_to_full(n, low, lowdeg):
    deg = lowdeg.copy()
    for i in range(low.shape[0]):
        deg[low[i]] += 1
    off = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        off[v + 1] = off[v] + deg[v]
    nbr = np.empty(off[n], dtype=np.int32)
    fill_low = off[:n].copy()
    fill_up = off[:n] + lowdeg
    idx = 0
    for v in range(n):
        for _ in range(lowdeg[v]):
            w = low[idx]
            idx += 1
            nbr[fill_low[v]] = w
            fill_low[v] += 1
            nbr[fill_up[w]] = v
            fill_up[w] += 1
    return off, nbr


def _complete(n: int) -> Graph:
    off = np.arange(n + 1, dtype=np.int64) * (n - 1)
    nbr = np.empty(n * (n - 1), dtype=np.int32)
    base = np.arange(n, dtype=np.int32)
    for v in range(n):
        nbr[off[v] : off[v + 1]] = np.delete(base, v)
    return Graph(n=n, m=n * (n - 1) // 2, off=off, nbr=nbr)


def empty_graph(n: int) -> Graph:
    return Graph(n=n, m=0, off=np.zeros(n + 1, dtype=np.int64), nbr=np.empty(0, dtype=np.int32))


def complete_graph(n: int) -> Graph:
    return _complete(n)


def from_edges(n: int, edges) -> Graph:
    """Graph on v_1..v_n from 1-based pairs; duplicates and orientation are normalized."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 1 or e.max() > n):
        raise ParameterError("edge endpoint outside [1, n]")
    if np.any(e[:, 0] == e[:, 1]):
        raise ParameterError("self-loops are not allowed")
    u = np.minimum(e[:, 0], e[:, 1]) - 1
    v = np.maximum(e[:, 0], e[:, 1]) - 1
    return _from_pairs(n, u, v)


def _from_pairs(n: int, u: np.ndarray, v: np.ndarray) -> Graph:
    # u < v, 0-based
    key = np.unique(u * n + v)
    u, v = key // n, key % n
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    off = np.zeros(n + 1, dtype=np.int64)
    np.add.at(off, src + 1, 1)
    np.cumsum(off, out=off)
    return Graph(n=n, m=len(key), off=off, nbr=dst.astype(np.int32))


def expected_edges(n: int, p: float) -> float:
    return n * (n - 1) / 2 * p


def sample_gnp(params: GnpParams, max_edges: int = DEFAULT_EDGE_CAP) -> Graph:
    """Sample G(n, p) by geometric skipping over the C(n,2) pair indices; O(n + m) expected."""
    n, p = params.n, params.p
    exp_m = expected_edges(n, p)
    if exp_m > max_edges:
        raise CapacityError(
            f"expected edge count {exp_m:.4g} exceeds the cap of {max_edges} edges"
        )
    if p == 0.0 or n == 1:
        return empty_graph(n)
    if p == 1.0:
        return _complete(n)
    sd = math.sqrt(exp_m * (1 - p))
    cap = int(exp_m + 8 * sd + 1024)
    while True:
        low, lowdeg, m = _skip_sample_lower(n, p, new_state(params.seed), cap)
        if m >= 0:
            break
        cap *= 2  # astronomically rare; rerun the identical stream with more room
    low = low[:m]
    off, nbr = _lower_to_full(n, low, lowdeg)
    return Graph(n=n, m=int(m), off=off, nbr=nbr)


def resample_induced(graph: Graph, vertices, p: float, seed: int) -> Graph:
    """Replace every pair inside ``vertices`` (1-based) with fresh G(|S|, p) randomness."""
    S = np.unique(np.asarray(vertices, dtype=np.int64)) - 1
    inside = np.zeros(graph.n, dtype=bool)
    inside[S] = True
    e = graph.edges() - 1
    keep = ~(inside[e[:, 0]] & inside[e[:, 1]])
    fresh = sample_gnp(GnpParams(max(len(S), 1), p, seed)) if len(S) else empty_graph(1)
    fe = fresh.edges() - 1 if len(S) else np.empty((0, 2), dtype=np.int64)
    fu, fv = S[fe[:, 0]], S[fe[:, 1]]
    u = np.concatenate([e[keep, 0], np.minimum(fu, fv)])
    v = np.concatenate([e[keep, 1], np.maximum(fu, fv)])
    return _from_pairs(graph.n, u, v)


def check_invariants(g: Graph) -> None:
    """Raise AssertionError unless symmetry, sortedness, loop-freedom and the degree sum hold."""
    off, nbr = g.off, g.nbr
    assert off.shape == (g.n + 1,) and off[0] == 0
    assert off[-1] == 2 * g.m, "degree sum must equal 2m"
    assert nbr.shape == (2 * g.m,)
    if g.m == 0:
        return
    src = np.repeat(np.arange(g.n, dtype=np.int64), np.diff(off))
    dst = nbr.astype(np.int64)
    assert np.all(src != dst), "self-loop"
    same_row = src[1:] == src[:-1]
    assert np.all(dst[1:][same_row] > dst[:-1][same_row]), "neighbor lists must be strictly ascending"
    fwd = np.sort(src * g.n + dst)
    rev = np.sort(dst * g.n + src)
    assert np.array_equal(fwd, rev), "adjacency is not symmetric"
