"""Network generation (random graph, small world, scale free) and statistics.

Graphs are stored in compressed sparse row form: ``indices[indptr[i]:indptr[i+1]]``
lists the sorted neighbours of node ``i``. The CSR arrays are handed straight
to the numba kernels in :mod:`ngle.game`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from numba import njit

MAX_ATTEMPTS = 100


class UnconnectableError(RuntimeError):
    """Raised when no connected instance was drawn within the retry bound."""


class DisconnectedGraphError(ValueError):
    pass


# ---------------------------------------------------------------------------
# network specifications


@dataclass(frozen=True)
class ErdosRenyi:
    n: int
    p: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not 0 < self.p <= 1:
            raise ValueError(f"p must be in (0, 1], got {self.p}")

    @property
    def label(self) -> str:
        return f"RG/{self.p:g}"


@dataclass(frozen=True)
class WattsStrogatz:
    """Ring of ``n`` nodes, ``k`` neighbours per side, rewiring probability ``rp``."""

    n: int
    k: int
    rp: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.k < 1 or 2 * self.k >= self.n:
            raise ValueError(f"need 1 <= k and 2k < n, got k={self.k}, n={self.n}")
        if not 0 <= self.rp <= 1:
            raise ValueError(f"rp must be in [0, 1], got {self.rp}")

    @property
    def label(self) -> str:
        return f"SW/{self.k}/{self.rp:g}"


@dataclass(frozen=True)
class BarabasiAlbert:
    """Complete seed graph on ``m0`` nodes, then ``m`` preferential edges per new node."""

    n: int
    m0: int
    m: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not 2 <= self.m0 <= self.n:
            raise ValueError(f"need 2 <= m0 <= n, got m0={self.m0}, n={self.n}")
        if not 1 <= self.m <= self.m0:
            raise ValueError(f"need 1 <= m <= m0, got m={self.m}, m0={self.m0}")

    @property
    def label(self) -> str:
        return f"SF/{self.m}"


NetworkSpec = Union[ErdosRenyi, WattsStrogatz, BarabasiAlbert]


def make_spec(kind: str, n: int = 2000, p=None, k=None, rp=None, m0=None, m=None) -> NetworkSpec:
    """Build a spec from a short type name (``rg``/``er``, ``sw``/``ws``, ``sf``/``ba``)."""
    kind = kind.lower()
    if kind in ("rg", "er", "random", "erdos-renyi"):
        return ErdosRenyi(int(n), float(p if p is not None else 0.05))
    if kind in ("sw", "ws", "small-world", "watts-strogatz"):
        return WattsStrogatz(int(n), int(k if k is not None else 20), float(rp if rp is not None else 0.1))
    if kind in ("sf", "ba", "scale-free", "barabasi-albert"):
        m = int(m if m is not None else 25)
        return BarabasiAlbert(int(n), int(m0 if m0 is not None else m + 1), m)
    raise ValueError(f"unknown network type {kind!r}")


# ---------------------------------------------------------------------------
# graph container


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        """Build from an iterable / ``(E, 2)`` array of undirected edges.

        Rejects self-loops and duplicate edges.
        """
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            raise ValueError("duplicate edges are not allowed")
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        indices = dst.astype(np.int32)
        indptr.setflags(write=False)
        indices.setflags(write=False)
        return cls(int(n), indptr, indices)

    @property
    def n_edges(self) -> int:
        return int(self.indices.size // 2)

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edges(self) -> np.ndarray:
        """Sorted ``(E, 2)`` array of edges with ``i < j``."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degree())
        dst = self.indices.astype(np.int64)
        mask = src < dst
        return np.column_stack([src[mask], dst[mask]])

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.n_edges})"


# ---------------------------------------------------------------------------
# generators


def _erdos_renyi_edges(spec: ErdosRenyi, rng: np.random.Generator) -> np.ndarray:
    n = spec.n
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < spec.p
    return np.column_stack([iu[keep], ju[keep]])


def _watts_strogatz_edges(spec: WattsStrogatz, rng: np.random.Generator) -> np.ndarray:
    n, k = spec.n, spec.k
    adj = [set() for _ in range(n)]
    for j in range(1, k + 1):
        for i in range(n):
            t = (i + j) % n
            adj[i].add(t)
            adj[t].add(i)
    coins = rng.random((k, n))
    for j in range(1, k + 1):
        row = coins[j - 1]
        for i in range(n):
            if row[i] >= spec.rp:
                continue
            t = (i + j) % n
            if t not in adj[i] or len(adj[i]) >= n - 1:
                continue
            # bounded resampling; an exhausted budget leaves the lattice edge in place
            for _ in range(64):
                w = int(rng.integers(n))
                if w != i and w not in adj[i]:
                    adj[i].remove(t)
                    adj[t].remove(i)
                    adj[i].add(w)
                    adj[w].add(i)
                    break
    return np.array([(i, j) for i in range(n) for j in adj[i] if i < j], dtype=np.int64)


def _barabasi_albert_edges(spec: BarabasiAlbert, rng: np.random.Generator) -> np.ndarray:
    n, m0, m = spec.n, spec.m0, spec.m
    n_edges = m0 * (m0 - 1) // 2 + (n - m0) * m
    edges = np.empty((n_edges, 2), dtype=np.int64)
    # every edge endpoint once: sampling uniformly from it is degree-proportional
    ends = np.empty(2 * n_edges, dtype=np.int64)
    e = 0
    for i in range(m0):
        for j in range(i + 1, m0):
            edges[e] = (i, j)
            ends[2 * e], ends[2 * e + 1] = i, j
            e += 1
    for v in range(m0, n):
        pool = ends[:2 * e]
        targets: list[int] = []
        seen = set()
        while len(targets) < m:
            for t in pool[rng.integers(pool.size, size=m - len(targets))]:
                t = int(t)
                if t not in seen:
                    seen.add(t)
                    targets.append(t)
                    if len(targets) == m:
                        break
        for t in targets:
            edges[e] = (t, v)
            ends[2 * e], ends[2 * e + 1] = t, v
            e += 1
    return edges


_GENERATORS = {
    ErdosRenyi: _erdos_renyi_edges,
    WattsStrogatz: _watts_strogatz_edges,
    BarabasiAlbert: _barabasi_albert_edges,
}


def generate(spec: NetworkSpec, rng, max_attempts: int = MAX_ATTEMPTS) -> Graph:
    """Generate a connected instance of ``spec``.

    Disconnected draws are discarded and regenerated wholesale with fresh
    randomness from ``rng`` (a ``numpy.random.Generator`` or an integer seed).
    Raises :class:`UnconnectableError` after ``max_attempts`` failures.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    build = _GENERATORS[type(spec)]
    for _ in range(max_attempts):
        g = Graph.from_edges(spec.n, build(spec, rng))
        if is_connected(g):
            return g
    raise UnconnectableError(f"{spec} produced no connected instance in {max_attempts} attempts")


# ---------------------------------------------------------------------------
# statistics


@njit(cache=True)
def _bfs_reach(indptr, indices, source, dist, queue):
    n = indptr.size - 1
    for i in range(n):
        dist[i] = -1
    dist[source] = 0
    queue[0] = source
    head, tail = 0, 1
    total = 0
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u] + 1
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if dist[v] < 0:
                dist[v] = du
                total += du
                queue[tail] = v
                tail += 1
    return tail, total


@njit(cache=True)
def _connected(indptr, indices):
    n = indptr.size - 1
    dist = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    reached, _ = _bfs_reach(indptr, indices, 0, dist, queue)
    return reached == n


@njit(cache=True)
def _path_length_sum(indptr, indices):
    n = indptr.size - 1
    dist = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    total = 0
    for s in range(n):
        reached, sub = _bfs_reach(indptr, indices, s, dist, queue)
        if reached != n:
            return -1
        total += sub
    return total


@njit(cache=True)
def _local_clustering(indptr, indices):
    n = indptr.size - 1
    mark = np.zeros(n, np.bool_)
    out = np.zeros(n, np.float64)
    for u in range(n):
        a, b = indptr[u], indptr[u + 1]
        d = b - a
        if d < 2:
            continue
        for p in range(a, b):
            mark[indices[p]] = True
        links = 0
        for p in range(a, b):
            v = indices[p]
            for q in range(indptr[v], indptr[v + 1]):
                if mark[indices[q]]:
                    links += 1
        for p in range(a, b):
            mark[indices[p]] = False
        # each closed pair was counted from both ends
        out[u] = links / (d * (d - 1.0))
    return out


def is_connected(g: Graph) -> bool:
    if g.n <= 1:
        return True
    return bool(_connected(g.indptr, g.indices))


def average_degree(g: Graph) -> float:
    return 2.0 * g.n_edges / g.n


def average_path_length(g: Graph) -> float:
    """Mean BFS hop distance over all unordered node pairs."""
    if g.n < 2:
        return 0.0
    total = _path_length_sum(g.indptr, g.indices)
    if total < 0:
        raise DisconnectedGraphError("average path length is undefined on a disconnected graph")
    # every unordered pair was summed twice
    return total / (g.n * (g.n - 1.0))


def clustering_coefficient(g: Graph) -> float:
    """Average local clustering; nodes of degree < 2 contribute 0."""
    return float(_local_clustering(g.indptr, g.indices).mean())


def network_stats(g: Graph) -> dict:
    return {
        "average_degree": average_degree(g),
        "average_path_length": average_path_length(g),
        "clustering_coefficient": clustering_coefficient(g),
    }


# ---------------------------------------------------------------------------
# edge-list files


def write_edge_list(g: Graph, path) -> None:
    """Write ``# n=<n>`` then one sorted, 0-based ``i j`` pair (i < j) per line."""
    lines = [f"# n={g.n}"]
    lines.extend(f"{i} {j}" for i, j in g.edges())
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> Graph:
    n = None
    pairs = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("n="):
                n = int(body[2:])
            continue
        i, j = line.split()[:2]
        pairs.append((int(i), int(j)))
    if n is None:
        n = 1 + max((max(p) for p in pairs), default=-1)
    return Graph.from_edges(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))

