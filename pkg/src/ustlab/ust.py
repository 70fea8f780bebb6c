"""Loop erasure, cut points and uniform spanning tree samplers.

Trees and forests are :class:`OrientedForest` objects: parent pointers with
the edge id used, oriented toward a root set.  A forest sampled with root
set ``W`` on ``G`` is the pull-back of the spanning tree of ``G/W``.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy

from . import _kernels as K
from .network import GraphError, Network, as_vertex_set
from .seeding import kernel_seed
from .walks import Walk

__all__ = [
    "ROOT",
    "LoopErasure",
    "OrientedForest",
    "loop_erase",
    "cut_times",
    "cut_points",
    "segment_decomposition",
    "wilson",
    "wilson_batch",
    "aldous_broder_batch",
    "tree_keys",
    "aldous_broder",
    "lerw",
    "ust_path",
    "spanning_tree_count",
    "enumerate_spanning_trees",
    "ust_distribution",
    "forest_from_edges",
    "diameter",
    "past",
    "future",
    "height",
    "tree_path",
    "write_forest",
    "read_forest",
    "tree_key",
    "frequency_table",
]

ROOT = -1


@dataclass(frozen=True)
class LoopErasure:
    """Chronological loop erasure of a walk.

    ``lambda_times[k]`` is the walk index that contributes ``path[k]``.
    """

    path: np.ndarray
    lambda_times: np.ndarray

    def __len__(self):
        return self.path.size


def _vertices(x):
    if isinstance(x, Walk):
        return x.vertices
    return np.asarray(x, dtype=np.int64)


def _last_occurrence(x):
    last = {}
    for t, v in enumerate(x.tolist()):
        last[v] = t
    return last


def loop_erase(x) -> LoopErasure:
    """Loop erasure with its contributing times, in O(L).

    ``lambda_0 = 0`` and ``lambda_{k+1} = 1 + max{t : X_t = X_{lambda_k}}``,
    stopping when that maximum is the last index.
    """
    x = _vertices(x)
    if x.size == 0:
        raise ValueError("cannot loop-erase an empty walk")
    last = _last_occurrence(x)
    L = x.size - 1
    times = [0]
    while True:
        i = last[int(x[times[-1]])]
        if i >= L:
            break
        times.append(i + 1)
    lam = np.asarray(times, dtype=np.int64)
    return LoopErasure(x[lam], lam)


def cut_times(x) -> np.ndarray:
    """Times ``0 <= t < L`` with ``X[0,t]`` and ``X[t+1,L]`` disjoint."""
    x = _vertices(x)
    last = _last_occurrence(x)
    out = []
    reach = -1
    for t in range(x.size - 1):
        reach = max(reach, last[int(x[t])])
        if reach == t:
            out.append(t)
    return np.asarray(out, dtype=np.int64)


def cut_points(x) -> np.ndarray:
    """Vertices visited at cut times (sorted, unique)."""
    x = _vertices(x)
    return np.unique(x[cut_times(x)])


def segment_decomposition(x, r: int, s: int):
    """Runs and their trimmed cores.

    For ``1 <= i <= floor(L/r)`` returns the pair ``(B_i, A_i)`` with
    ``B_i = X[(i-1)r, ir - s)`` and ``A_i = X[(i-1)r + s, ir - 2s)`` as
    :class:`Walk` slices.
    """
    if not isinstance(x, Walk):
        x = Walk(x)
    r, s = int(r), int(s)
    if r < 1 or s < 0 or 3 * s >= r:
        raise ValueError("need r >= 1 and 0 <= s < r/3")
    out = []
    for i in range(1, x.length // r + 1):
        b = x.slice((i - 1) * r, i * r - s, closed=False)
        a = x.slice((i - 1) * r + s, i * r - 2 * s, closed=False)
        out.append((b, a))
    return out


# -- forests ------------------------------------------------------------

class OrientedForest:
    """Parent-pointer forest oriented toward ``roots``.

    ``parent[v] == ROOT`` exactly for roots; ``parent_edge[v]`` is the id of
    the edge from ``v`` to its parent in the originating network.
    """

    __slots__ = ("parent", "parent_edge", "roots", "_depth")

    def __init__(self, parent, parent_edge, roots=None):
        self.parent = np.asarray(parent, dtype=np.int64)
        self.parent_edge = np.asarray(parent_edge, dtype=np.int64)
        if roots is None:
            roots = np.flatnonzero(self.parent == ROOT)
        self.roots = as_vertex_set(roots, self.n)
        self._depth = None

    @property
    def n(self):
        return self.parent.size

    def __repr__(self):
        return f"<OrientedForest n={self.n} roots={self.roots.size}>"

    def edge_set(self) -> frozenset:
        return frozenset(self.parent_edge[self.parent_edge >= 0].tolist())

    def depth(self) -> np.ndarray:
        if self._depth is None:
            self._depth = K.depth_kernel(self.parent)
        return self._depth

    def validate(self, g: Network | None = None) -> None:
        """Raise ``AssertionError`` unless this is a spanning oriented forest."""
        is_root = self.parent == ROOT
        if not np.array_equal(np.flatnonzero(is_root), self.roots):
            raise AssertionError("root set and parent pointers disagree")
        if np.any(self.parent_edge[~is_root] < 0):
            raise AssertionError("non-root vertex without a parent edge")
        # pointer doubling: every vertex must end at a root
        anc = np.where(is_root, np.arange(self.n), self.parent)
        for _ in range(max(1, int(self.n).bit_length()) + 1):
            anc = anc[anc]
        if not np.all(is_root[anc]):
            raise AssertionError("parent pointers contain a cycle")
        if g is not None:
            kids = np.flatnonzero(~is_root)
            ends = g.edges[self.parent_edge[kids]]
            pv = self.parent[kids]
            ok = ((ends[:, 0] == kids) & (ends[:, 1] == pv)) | (
                (ends[:, 1] == kids) & (ends[:, 0] == pv))
            if not np.all(ok):
                raise AssertionError("parent edge does not join child and parent")

    def children(self):
        kids = [[] for _ in range(self.n)]
        for v, p in enumerate(self.parent.tolist()):
            if p != ROOT:
                kids[p].append(v)
        return kids

    def heights(self) -> np.ndarray:
        """Height of the past of every vertex."""
        return K.subtree_heights_kernel(self.parent)


def forest_from_edges(g: Network, edge_ids, roots) -> OrientedForest:
    """Orient a spanning forest given as edge ids toward ``roots``."""
    roots = as_vertex_set(roots, g.n)
    adj = [[] for _ in range(g.n)]
    for e in edge_ids:
        a, b = g.edge_endpoints(e)
        adj[a].append((b, e))
        adj[b].append((a, e))
    parent = np.full(g.n, ROOT, dtype=np.int64)
    pedge = np.full(g.n, -1, dtype=np.int64)
    seen = np.zeros(g.n, dtype=bool)
    seen[roots] = True
    stack = list(roots.tolist())
    while stack:
        x = stack.pop()
        for y, e in adj[x]:
            if not seen[y]:
                seen[y] = True
                parent[y] = x
                pedge[y] = e
                stack.append(y)
    if not seen.all():
        raise GraphError("edge set does not span the vertices from the roots")
    return OrientedForest(parent, pedge, roots)


def past(forest: OrientedForest, v: int) -> np.ndarray:
    """Vertices with a directed path to ``v`` (``v`` included)."""
    kids = forest.children()
    out = [v]
    stack = [v]
    while stack:
        x = stack.pop()
        out.extend(kids[x])
        stack.extend(kids[x])
    return np.asarray(sorted(out), dtype=np.int64)


def future(forest: OrientedForest, v: int, exclude_roots: bool = False) -> np.ndarray:
    """The directed path from ``v`` to its root; optionally without the root."""
    out = [v]
    while forest.parent[out[-1]] != ROOT:
        out.append(int(forest.parent[out[-1]]))
    if exclude_roots:
        out = out[:-1]
    return np.asarray(out, dtype=np.int64)


def tree_path(forest: OrientedForest, u: int, v: int) -> np.ndarray:
    """Vertices of the path from ``u`` to ``v`` in a tree (one root)."""
    fu, fv = future(forest, u), future(forest, v)
    if fu[-1] != fv[-1]:
        raise ValueError("u and v lie in different trees of the forest")
    on_v = {int(x): i for i, x in enumerate(fv.tolist())}
    for i, x in enumerate(fu.tolist()):
        if x in on_v:
            return np.concatenate([fu[: i + 1], fv[: on_v[x]][::-1]])
    raise AssertionError("futures share a root but no vertex")


def height(forest: OrientedForest, v: int | None = None) -> int:
    """Longest directed path in the past of ``v``, or in the whole forest."""
    if v is None:
        return int(forest.depth().max())
    return int(forest.heights()[v])


def diameter(forest: OrientedForest) -> int:
    """Diameter of a spanning tree (a forest with exactly one root)."""
    if forest.roots.size != 1:
        raise ValueError("diameter needs a tree, got a forest with "
                         f"{forest.roots.size} roots")
    if forest.n == 1:
        return 0
    diam, reached = K.tree_diameter_kernel(forest.parent)
    if reached != forest.n:
        raise AssertionError("tree does not span all vertices")
    return int(diam)


# -- samplers -----------------------------------------------------------

def wilson(g: Network, root_set, seed=None, vertex_order=None, lazy=True) -> OrientedForest:
    """Wilson's algorithm with loop-erased walks stopped on the growing tree.

    The output has the weighted uniform spanning tree law of ``g/root_set``.
    ``lazy=False`` drops the holding coin, which leaves the law unchanged
    and halves the work.
    """
    roots = as_vertex_set(root_set, g.n)
    if roots.size == 0:
        raise ValueError("root set must be nonempty")
    in_tree = np.zeros(g.n, dtype=np.bool_)
    in_tree[roots] = True
    if vertex_order is None:
        order = np.flatnonzero(~in_tree)
    else:
        order = np.asarray(vertex_order, dtype=np.int64)
        if (np.unique(order).size != order.size or order.min() < 0
                or order.max() >= g.n):
            raise ValueError("vertex_order must list distinct vertices")
        if np.setdiff1d(np.flatnonzero(~in_tree), order).size:
            raise ValueError("vertex_order must cover every non-root vertex")
    parent, pedge, _ = K.wilson_kernel(g.indptr, g.nbr, g.cumw, g.slot_edge,
                                       in_tree, order, bool(lazy), kernel_seed(seed))
    return OrientedForest(parent, pedge, roots)


def wilson_batch(g: Network, root_set, reps: int, seed=None, lazy=False):
    """``reps`` independent Wilson forests in one compiled call.

    Returns ``(parents, parent_edges)`` arrays of shape ``(reps, n)``.
    """
    roots = as_vertex_set(root_set, g.n)
    if roots.size == 0:
        raise ValueError("root set must be nonempty")
    in_tree = np.zeros(g.n, dtype=np.bool_)
    in_tree[roots] = True
    return K.wilson_batch_kernel(g.indptr, g.nbr, g.cumw, g.slot_edge, in_tree,
                                 np.flatnonzero(~in_tree), bool(lazy), int(reps),
                                 kernel_seed(seed))


def aldous_broder_batch(g: Network, start: int, reps: int, seed=None, lazy=False):
    """``reps`` independent Aldous-Broder trees; see :func:`wilson_batch`."""
    return K.aldous_broder_batch_kernel(g.indptr, g.nbr, g.cumw, g.slot_edge, int(start),
                                        bool(lazy), int(reps), kernel_seed(seed))


def tree_keys(parent_edges) -> list:
    """Sorted edge-id tuples, one per row of a ``(reps, n)`` edge array."""
    e = np.sort(np.asarray(parent_edges), axis=1)
    return [tuple(row[row >= 0].tolist()) for row in e]


def aldous_broder(g: Network, start: int, seed=None, lazy=True, return_steps=False):
    """Aldous-Broder: keep the reversed first-entry edge of every vertex.

    With ``return_steps=True`` also returns the cover time of the walk.
    """
    parent, pedge, steps = K.aldous_broder_kernel(
        g.indptr, g.nbr, g.cumw, g.slot_edge, int(start), bool(lazy), kernel_seed(seed))
    tree = OrientedForest(parent, pedge, [int(start)])
    return (tree, int(steps)) if return_steps else tree


def lerw(g: Network, start: int, targets, seed=None, lazy=True):
    """Loop-erased walk from ``start`` until it hits ``targets``.

    Returns ``(vertices, edge ids)``; the last vertex is the hitting point.
    """
    mask = np.zeros(g.n, dtype=np.bool_)
    tv = as_vertex_set(targets, g.n)
    if tv.size == 0:
        raise ValueError("targets must be nonempty")
    mask[tv] = True
    path, edges, _ = K.lerw_kernel(g.indptr, g.nbr, g.cumw, g.slot_edge, int(start),
                                   mask, bool(lazy), kernel_seed(seed))
    return path, edges


def ust_path(g: Network, u: int, v: int, seed=None, lazy=True) -> np.ndarray:
    """The path between ``u`` and ``v`` in a uniform spanning tree, sampled
    as the loop erasure of a walk from ``u`` stopped at ``v``."""
    if u == v:
        raise ValueError("endpoints must differ")
    return lerw(g, u, [v], seed, lazy)[0]


# -- exact oracles ------------------------------------------------------

def _rational(w):
    f = Fraction(w)
    return sympy.Rational(f.numerator, f.denominator)


def spanning_tree_count(g: Network, max_n: int = 64):
    """Weighted spanning tree count by the matrix-tree theorem, exactly.

    An ``int`` for integer weights, a :class:`fractions.Fraction` otherwise.
    """
    if g.n > max_n:
        raise ValueError(f"exact determinant limited to n <= {max_n}")
    if g.n == 1:
        return 1
    integral = all(float(w).is_integer() for w in g.weights.tolist())
    L = [[0] * g.n for _ in range(g.n)]
    for (a, b), w in zip(g.edges.tolist(), g.weights.tolist()):
        if a == b:
            continue
        w = int(w) if integral else _rational(w)
        L[a][a] += w
        L[b][b] += w
        L[a][b] -= w
        L[b][a] -= w
    det = sympy.Matrix([row[1:] for row in L[1:]]).det(method="bareiss")
    if integral:
        return int(det)
    det = sympy.Rational(det)
    return Fraction(int(det.p), int(det.q))


def enumerate_spanning_trees(g: Network, max_n: int = 10, max_subsets: int = 5_000_000):
    """All spanning trees as sorted tuples of edge ids (filtering edge subsets)."""
    if g.n > max_n:
        raise ValueError(f"enumeration limited to n <= {max_n}")
    k = g.n - 1
    cand = [e for e in range(g.m) if g.edges[e, 0] != g.edges[e, 1]]
    if math.comb(len(cand), k) > max_subsets:
        raise ValueError("too many edge subsets to enumerate")
    ends = g.edges.tolist()
    trees = []
    for subset in itertools.combinations(cand, k):
        root = list(range(g.n))

        def find(x):
            while root[x] != x:
                root[x] = root[root[x]]
                x = root[x]
            return x

        for e in subset:
            a, b = find(ends[e][0]), find(ends[e][1])
            if a == b:
                break
            root[a] = b
        else:
            trees.append(subset)
    return trees


def ust_distribution(g: Network) -> dict:
    """Exact weighted-UST law: ``{edge-id tuple: probability}``."""
    trees = enumerate_spanning_trees(g)
    w = np.array([np.prod(g.weights[list(t)]) if t else 1.0 for t in trees])
    w = w / w.sum()
    return dict(zip(trees, w.tolist()))


# -- serialisation ------------------------------------------------------

def write_forest(forest: OrientedForest, path) -> None:
    """One ``u parent(u) edge_id`` line per vertex; roots use -1 for both."""
    with open(path, "w") as fh:
        for u, (p, e) in enumerate(zip(forest.parent.tolist(), forest.parent_edge.tolist())):
            fh.write(f"{u} {p} {e}\n")


def read_forest(path) -> OrientedForest:
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                rows.append([int(x) for x in line.split()])
    rows.sort()
    arr = np.asarray(rows, dtype=np.int64).reshape(-1, 3)
    if not np.array_equal(arr[:, 0], np.arange(arr.shape[0])):
        raise ValueError("forest file must list every vertex exactly once")
    return OrientedForest(arr[:, 1], arr[:, 2])


def tree_key(forest: OrientedForest) -> tuple:
    """Hashable identity of a forest: its sorted edge ids."""
    return tuple(sorted(forest.edge_set()))


def frequency_table(keys, support) -> np.ndarray:
    """Counts of ``keys`` over an ordered ``support`` (unseen keys raise)."""
    counts = Counter(keys)
    extra = set(counts) - set(support)
    if extra:
        raise AssertionError(f"samples outside the support: {sorted(extra)[:3]}")
    return np.array([counts.get(s, 0) for s in support])
