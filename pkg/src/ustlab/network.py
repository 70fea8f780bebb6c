"""Weighted multigraphs, graph-family generators and contractions.

Vertices are dense integers ``0..n-1``.  Edges carry ids equal to their
position in the edge arrays; contraction keeps those ids so that trees
sampled on a contracted network can be mapped back to the original one.

A self-loop occupies one adjacency slot and contributes its weight once to
the weighted degree.  A walk that uses it stays where it is, which is a
regular move and not a lazy step.
"""
from __future__ import annotations

import math
import os

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

__all__ = [
    "Network",
    "as_vertex_set",
    "make_torus",
    "make_hypercube",
    "make_complete",
    "make_cycle",
    "make_path",
    "make_star",
    "make_random_regular",
    "make_negative_controls",
    "contract",
    "make_sunny",
    "sun_step_probability",
    "read_edgelist",
    "write_edgelist",
    "GraphError",
]


class GraphError(ValueError):
    """Raised for invalid graph parameters or malformed networks."""


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class Network:
    """Immutable weighted multigraph.

    Parameters
    ----------
    n : int
        Number of vertices.
    edges : array_like, shape (m, 2)
        Endpoints of each edge; row ``i`` is the edge with id ``i``.
    weights : array_like, shape (m,), optional
        Positive finite edge weights (default: all ones).
    contraction_map : array_like, optional
        For contracted networks, the image of every vertex of the parent
        network.
    require_connected : bool
        Check connectivity on construction (default True).
    """

    def __init__(self, n, edges, weights=None, contraction_map=None,
                 require_connected=True, name=None):
        n = int(n)
        if n < 1:
            raise GraphError("a network needs at least one vertex")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        m = edges.shape[0]
        if weights is None:
            weights = np.ones(m)
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if weights.shape[0] != m:
            raise GraphError("weights and edges differ in length")
        if m and (edges.min() < 0 or edges.max() >= n):
            raise GraphError("edge endpoint out of range")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise GraphError("edge weights must be positive and finite")

        self.n = n
        self.m = m
        self.name = name
        self.edges = _frozen(edges)
        self.weights = _frozen(weights)
        self.contraction_map = (None if contraction_map is None
                                else _frozen(np.asarray(contraction_map, dtype=np.int64)))
        self._build_adjacency()
        if require_connected and not self.is_connected():
            raise GraphError("network is not connected")

    def _build_adjacency(self):
        u, v = self.edges[:, 0], self.edges[:, 1]
        loop = u == v
        eid = np.arange(self.m, dtype=np.int64)
        # one slot per endpoint, a single slot for self-loops
        src = np.concatenate([u, v[~loop]])
        dst = np.concatenate([v, u[~loop]])
        sid = np.concatenate([eid, eid[~loop]])
        order = np.lexsort((sid, src))
        src, dst, sid = src[order], dst[order], sid[order]
        w = self.weights[sid]
        counts = np.bincount(src, minlength=self.n)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        degree = np.bincount(src, weights=w, minlength=self.n)
        # running weight within each vertex block, for proportional sampling
        cum = np.cumsum(w)
        start = np.repeat(indptr[:-1], counts)
        base = np.where(start > 0, cum[np.maximum(start - 1, 0)], 0.0)
        cumw = cum - base

        self.indptr = _frozen(indptr)
        self.nbr = _frozen(dst)
        self.slot_edge = _frozen(sid)
        self.slot_weight = _frozen(w)
        self.cumw = _frozen(cumw)
        self.degrees = _frozen(degree)

    # -- basic queries -------------------------------------------------

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<Network{label} n={self.n} m={self.m}>"

    def neighbors(self, v):
        """Return ``(neighbor ids, edge ids, weights)`` for vertex ``v``."""
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return self.nbr[lo:hi], self.slot_edge[lo:hi], self.slot_weight[lo:hi]

    def is_connected(self):
        if self.n == 1:
            return True
        ncomp, _ = connected_components(self.adjacency(), directed=False)
        return ncomp == 1

    @property
    def is_unit_weight(self):
        return bool(np.all(self.weights == 1.0))

    @property
    def total_degree(self):
        return float(self.degrees.sum())

    @property
    def stationary(self):
        """Stationary law of the lazy walk, proportional to weighted degree."""
        return self.degrees / self.degrees.sum()

    @property
    def max_degree(self):
        return float(self.degrees.max())

    @property
    def min_degree(self):
        return float(self.degrees.min())

    @property
    def balance(self):
        """Ratio of maximum to minimum (weighted) degree."""
        return self.max_degree / self.min_degree

    def volume(self, vertices):
        return float(self.degrees[as_vertex_set(vertices, self.n)].sum())

    def adjacency(self):
        """Symmetric weighted adjacency matrix (CSR); a self-loop sits once on the diagonal."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return sparse.csr_matrix((self.slot_weight, (rows, self.nbr)),
                                 shape=(self.n, self.n))

    def edge_endpoints(self, e):
        return int(self.edges[e, 0]), int(self.edges[e, 1])

    def is_bipartite(self):
        color = -np.ones(self.n, dtype=np.int64)
        for s in range(self.n):
            if color[s] >= 0:
                continue
            color[s] = 0
            stack = [s]
            while stack:
                x = stack.pop()
                for y in self.neighbors(x)[0]:
                    if color[y] < 0:
                        color[y] = 1 - color[x]
                        stack.append(y)
                    elif color[y] == color[x]:
                        return False
        return True

    def graph_distances(self, source):
        """Hop distances from ``source`` (unweighted BFS)."""
        from scipy.sparse.csgraph import shortest_path
        return shortest_path(self.adjacency(), unweighted=True,
                             indices=int(source)).astype(np.int64)


def as_vertex_set(vertices, n=None) -> np.ndarray:
    """Sorted array of unique vertex ids, validated against ``n``."""
    if isinstance(vertices, (int, np.integer)):
        vertices = [vertices]
    arr = np.unique(np.asarray(list(vertices) if not isinstance(vertices, np.ndarray)
                               else vertices, dtype=np.int64))
    if n is not None and arr.size and (arr[0] < 0 or arr[-1] >= n):
        raise GraphError("vertex id out of range")
    return arr


# -- generators ---------------------------------------------------------

def make_torus(d: int, m: int) -> Network:
    """The torus Z_m^d with row-major vertex ids (last coordinate fastest)."""
    if d < 1:
        raise GraphError("dimension must be at least 1")
    if m < 3:
        raise GraphError("side length must be at least 3; use make_hypercube for m=2")
    n = m ** d
    ids = np.arange(n, dtype=np.int64)
    edges = []
    for axis in range(d):
        stride = m ** (d - 1 - axis)
        coord = (ids // stride) % m
        nxt = ids + np.where(coord == m - 1, -(m - 1) * stride, stride)
        edges.append(np.stack([ids, nxt], axis=1))
    return Network(n, np.concatenate(edges), name=f"torus({d},{m})")


def make_hypercube(m: int) -> Network:
    """The hypercube {0,1}^m; a vertex id is its bitstring value."""
    if m < 1:
        raise GraphError("hypercube dimension must be at least 1")
    n = 1 << m
    ids = np.arange(n, dtype=np.int64)
    edges = []
    for bit in range(m):
        lo = ids[(ids >> bit) & 1 == 0]
        edges.append(np.stack([lo, lo | (1 << bit)], axis=1))
    return Network(n, np.concatenate(edges), name=f"hypercube({m})")


def make_complete(n: int) -> Network:
    if n < 2:
        raise GraphError("complete graph needs n >= 2")
    iu = np.triu_indices(n, 1)
    return Network(n, np.stack(iu, axis=1), name=f"complete({n})")


def make_cycle(n: int) -> Network:
    if n < 3:
        raise GraphError("cycle needs n >= 3")
    ids = np.arange(n)
    return Network(n, np.stack([ids, (ids + 1) % n], axis=1), name=f"cycle({n})")


def make_path(n: int) -> Network:
    if n < 2:
        raise GraphError("path needs n >= 2")
    ids = np.arange(n - 1)
    return Network(n, np.stack([ids, ids + 1], axis=1), name=f"path({n})")


def make_star(n: int) -> Network:
    """Vertex 0 joined to the ``n - 1`` leaves."""
    if n < 2:
        raise GraphError("star needs n >= 2")
    leaves = np.arange(1, n)
    return Network(n, np.stack([np.zeros_like(leaves), leaves], axis=1),
                   name=f"star({n})")


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def make_random_regular(n: int, k: int, seed=None, max_rounds: int = 10_000) -> Network:
    """Uniform-ish simple connected k-regular graph from the pairing model.

    Whole configurations are rejected when they contain a self-loop, a
    repeated edge, or are disconnected.
    """
    if k < 3:
        raise GraphError("degree must be at least 3")
    if n <= k:
        raise GraphError("need n > k")
    if (n * k) % 2:
        raise GraphError("n*k must be even")
    rng = _rng(seed)
    stubs = np.repeat(np.arange(n, dtype=np.int64), k)
    for _ in range(max_rounds):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        key = lo * n + hi
        if np.unique(key).size != key.size:
            continue
        order = np.argsort(key)
        g = Network(n, np.stack([lo[order], hi[order]], axis=1),
                    require_connected=False, name=f"random_regular({n},{k})")
        if g.is_connected():
            return g
    raise GraphError(f"no simple connected {k}-regular graph on {n} vertices "
                     f"after {max_rounds} rounds")


def make_negative_controls(kind: str, n: int, seed=None) -> Network:
    """Graphs that break one of the high-dimensionality assumptions.

    ``path`` and ``star`` have ``n`` vertices, ``two-cliques`` joins two
    copies of K_{n/2} by one edge (n must be even).  ``expander-with-paths``
    hangs a path of length about log n off every vertex of a random
    3-regular graph; its size is the closest attainable value to ``n``.
    """
    if n < 4:
        raise GraphError("negative controls need n >= 4")
    if kind == "path":
        return make_path(n)
    if kind == "star":
        return make_star(n)
    if kind == "two-cliques":
        if n % 2:
            raise GraphError("two-cliques needs even n")
        h = n // 2
        iu = np.stack(np.triu_indices(h, 1), axis=1)
        edges = np.concatenate([iu, iu + h, [[h - 1, h]]])
        return Network(n, edges, name=f"two-cliques({n})")
    if kind == "expander-with-paths":
        tail = max(1, round(math.log(n)))
        core = max(4, n // (tail + 1))
        core += core % 2
        h = make_random_regular(core, 3, seed)
        edges = [h.edges]
        nxt = core
        for v in range(core):
            prev = v
            for _ in range(tail):
                edges.append([[prev, nxt]])
                prev = nxt
                nxt += 1
        return Network(nxt, np.concatenate(edges), name=f"expander-with-paths({nxt})")
    raise GraphError(f"unknown negative control {kind!r}")


# -- constructions ------------------------------------------------------

def contract(g: Network, w_set) -> Network:
    """Merge ``w_set`` into one vertex, keeping every edge and its id.

    The remaining vertices keep their relative order and are numbered
    ``0..n-|W|-1``; the merged vertex gets the last id.  Edges inside ``W``
    become self-loops.
    """
    w = as_vertex_set(w_set, g.n)
    if w.size == 0:
        raise GraphError("cannot contract an empty set")
    in_w = np.zeros(g.n, dtype=bool)
    in_w[w] = True
    cmap = np.empty(g.n, dtype=np.int64)
    cmap[~in_w] = np.arange(g.n - w.size)
    super_vertex = g.n - w.size
    cmap[in_w] = super_vertex
    return Network(super_vertex + 1, cmap[g.edges], g.weights, contraction_map=cmap,
                   name=f"{g.name or 'G'}/W")


def make_sunny(g: Network, beta: float) -> Network:
    """Add a sun vertex (id ``n``) reached from every vertex with lazy
    one-step probability ``beta**2 / sqrt(n)``.

    Sun edges have ids ``m..m+n-1``, in vertex order.
    """
    if not g.is_unit_weight:
        raise GraphError("sunny network is defined for unit-weight graphs")
    n = g.n
    root_n = math.sqrt(n)
    if not (0 < beta and 2 * beta * beta < root_n):
        raise GraphError(f"beta must lie in (0, n^(1/4)/sqrt(2)); got {beta}")
    sun_w = 2 * beta * beta * g.degrees / (root_n - 2 * beta * beta)
    ids = np.arange(n, dtype=np.int64)
    edges = np.concatenate([g.edges, np.stack([ids, np.full(n, n)], axis=1)])
    weights = np.concatenate([g.weights, sun_w])
    return Network(n + 1, edges, weights, name=f"sunny({g.name or 'G'},{beta})")


def sun_step_probability(sunny: Network) -> np.ndarray:
    """Lazy one-step probability from each original vertex to the sun."""
    rho = sunny.n - 1
    out = np.zeros(rho)
    for u in range(rho):
        nb, _, w = sunny.neighbors(u)
        out[u] = 0.5 * w[nb == rho].sum() / sunny.degrees[u]
    return out


# -- edge-list format ---------------------------------------------------

def write_edgelist(g: Network, path) -> None:
    """Write ``n m`` then one ``u v weight`` line per edge, in edge-id order."""
    with open(path, "w") as fh:
        fh.write(f"{g.n} {g.m}\n")
        for (u, v), w in zip(g.edges.tolist(), g.weights.tolist()):
            fh.write(f"{u} {v} {w:.17g}\n")


def read_edgelist(path, require_connected=True) -> Network:
    with open(path) as fh:
        rows = [line.split() for line in fh if line.strip()]
    if not rows or len(rows[0]) != 2:
        raise GraphError(f"{os.fspath(path)}: missing 'n m' header")
    n, m = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != m:
        raise GraphError(f"{os.fspath(path)}: header announces {m} edges, found {len(body)}")
    edges = np.array([[int(r[0]), int(r[1])] for r in body], dtype=np.int64).reshape(-1, 2)
    weights = np.array([float(r[2]) if len(r) > 2 else 1.0 for r in body])
    return Network(n, edges, weights, require_connected=require_connected)
