"""The W-wired interlacement process and the forests it drives.

A W-trajectory is a walk that starts in ``W``, takes at least one step and
stops the first time it is back in ``W``.  Trajectories are drawn from the
measure with weight ``prod w(e) / (Vol(W) * prod_{0<i<l} d(u_i))``: pick
``u_0`` with probability ``d(u_0)/Vol(W)`` and run the non-lazy walk until it
returns to ``W``.  Since the walk returns almost surely the measure has total
mass one, so on a time window ``[a, b]`` the number of trajectories is
Poisson with mean ``b - a`` and their timestamps are i.i.d. uniform.

Reading, for every vertex outside ``W``, the reversed first edge that enters
it among the trajectories after time ``t`` gives the forest ``AB_W(t)``,
whose law is the uniform spanning tree of ``G/W`` pulled back to ``G``.

The timeline is infinite; a sample only holds a finite window.  Queries that
need trajectories beyond the window raise :class:`CoverageExhausted` and
:func:`sample_covering` grows the window by doubling until they succeed.
Disjoint windows are independent, so extension does not bias anything.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .network import Network, as_vertex_set
from .seeding import as_generator, derive_seed, kernel_seed
from .ust import OrientedForest, wilson
from .walks import w_bubble_sum

__all__ = [
    "CoverageExhausted",
    "WTrajectory",
    "InterlacementSample",
    "sample_trajectory",
    "sample_window",
    "extend_window",
    "sample_covering",
    "ab_forest",
    "sample_ab_forest",
    "ab_forest_batch",
    "sigma",
    "first_entry_edge",
    "interlacement_set",
    "time_shift",
    "write_event_log",
    "TailTable",
    "past_height_tail",
    "BallGrowth",
    "ball_growth",
    "forest_roots",
]


class CoverageExhausted(RuntimeError):
    """The sampled window ends before the query is decided."""


@dataclass(frozen=True)
class WTrajectory:
    vertices: np.ndarray
    edges: np.ndarray

    @property
    def length(self) -> int:
        return int(self.edges.size)

    def is_valid(self, g: Network, w_mask) -> bool:
        v, e = self.vertices, self.edges
        if e.size < 1 or v.size != e.size + 1:
            return False
        if not (w_mask[v[0]] and w_mask[v[-1]]) or w_mask[v[1:-1]].any():
            return False
        a, b = g.edges[e, 0], g.edges[e, 1]
        return bool(np.all(((a == v[:-1]) & (b == v[1:])) | ((b == v[:-1]) & (a == v[1:]))))


def _w_mask(n, w_set):
    w = as_vertex_set(w_set, n)
    if w.size == 0:
        raise ValueError("W must be nonempty")
    mask = np.zeros(n, dtype=np.bool_)
    mask[w] = True
    return w, mask


class InterlacementSample:
    """Immutable Poisson sample of W-trajectories on a time window.

    Stored flat: ``times[i]`` is the timestamp of trajectory ``i``, whose
    vertices are ``verts[voff[i]:voff[i+1]]`` and whose edges start at
    ``voff[i] - i``.
    """

    def __init__(self, times, verts, edges, voff, window, w_set, n):
        self.times = _ro(np.asarray(times, dtype=np.float64))
        self.verts = _ro(np.asarray(verts, dtype=np.int64))
        self.edges = _ro(np.asarray(edges, dtype=np.int64))
        self.voff = _ro(np.asarray(voff, dtype=np.int64))
        self.window = (float(window[0]), float(window[1]))
        self.n = int(n)
        self.w_set, self.w_mask = _w_mask(self.n, w_set)
        self.w_set.setflags(write=False)
        self.w_mask.setflags(write=False)
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self):
        return self.times.size

    def __repr__(self):
        a, b = self.window
        return f"<InterlacementSample [{a:g}, {b:g}] events={len(self)} |W|={self.w_set.size}>"

    def trajectory(self, i) -> WTrajectory:
        lo, hi = self.voff[i], self.voff[i + 1]
        return WTrajectory(self.verts[lo:hi], self.edges[lo - i:hi - i - 1])

    @property
    def events(self):
        return [(float(t), self.trajectory(i)) for i, t in enumerate(self.times)]

    def first_index(self, t) -> int:
        """Index of the first trajectory with timestamp at least ``t``."""
        return int(np.searchsorted(self.times, t, side="left"))

    def restrict(self, a, b) -> "InterlacementSample":
        if not (self.window[0] <= a <= b <= self.window[1]):
            raise ValueError("restriction must lie inside the window")
        i, j = self.first_index(a), int(np.searchsorted(self.times, b, side="right"))
        lo, hi = self.voff[i], self.voff[j]
        return InterlacementSample(self.times[i:j], self.verts[lo:hi],
                                   self.edges[lo - i:hi - j], self.voff[i:j + 1] - lo,
                                   (a, b), self.w_set, self.n)

    def validate(self, g: Network) -> None:
        for i in range(len(self)):
            if not self.trajectory(i).is_valid(g, self.w_mask):
                raise AssertionError(f"trajectory {i} is not a W-trajectory")
        a, b = self.window
        if self.times.size and (self.times[0] < a or self.times[-1] > b):
            raise AssertionError("timestamp outside the window")


def _ro(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _starts(g, w_set, rng, size):
    cum = np.cumsum(g.degrees[w_set])
    if cum[-1] <= 0:
        raise ValueError("W has zero volume")
    idx = np.searchsorted(cum, rng.random(size) * cum[-1], side="right")
    return w_set[np.minimum(idx, w_set.size - 1)]


def _strictly_increasing(times):
    # ties have probability zero; break any floating-point collision by
    # keeping the index order and nudging the later stamp upward
    for i in np.flatnonzero(np.diff(times) <= 0):
        times[i + 1] = np.nextafter(max(times[i + 1], times[i]), np.inf)
    return times


def sample_trajectory(g: Network, w_set, rng=None) -> WTrajectory:
    """One trajectory drawn from the normalized trajectory measure of ``W``."""
    w, mask = _w_mask(g.n, w_set)
    rng = as_generator(rng)
    start = _starts(g, w, rng, 1)
    verts, edges, _ = K.trajectories_kernel(g.indptr, g.nbr, g.cumw, g.slot_edge,
                                            start, mask, kernel_seed(rng))
    return WTrajectory(verts, edges)


def sample_window(g: Network, w_set, a: float, b: float, seed=None) -> InterlacementSample:
    """Poisson sample of W-trajectories with timestamps in ``[a, b]``."""
    if not b > a:
        raise ValueError("window needs a < b")
    w, mask = _w_mask(g.n, w_set)
    rng = as_generator(seed)
    count = int(rng.poisson(b - a))
    times = _strictly_increasing(np.sort(rng.uniform(a, b, size=count)))
    starts = _starts(g, w, rng, count)
    verts, edges, voff = K.trajectories_kernel(g.indptr, g.nbr, g.cumw, g.slot_edge,
                                               starts, mask, kernel_seed(rng))
    return InterlacementSample(times, verts, edges, voff, (a, b), w, g.n)


def _concat(first: InterlacementSample, second: InterlacementSample) -> InterlacementSample:
    if first.window[1] != second.window[0]:
        raise ValueError("windows must be adjacent")
    k = len(first)
    return InterlacementSample(
        np.concatenate([first.times, second.times]),
        np.concatenate([first.verts, second.verts]),
        np.concatenate([first.edges, second.edges]),
        np.concatenate([first.voff, second.voff[1:] + first.voff[k]]),
        (first.window[0], second.window[1]), first.w_set, first.n)


def extend_window(sample: InterlacementSample, g: Network, b: float, seed=None) -> InterlacementSample:
    """Append an independent sample on ``[sample.window[1], b]``."""
    return _concat(sample, sample_window(g, sample.w_set, sample.window[1], b, seed))


def sample_covering(g: Network, w_set, t: float = 0.0, seed=None, initial_length=None,
                    until=None, max_doublings: int = 60) -> InterlacementSample:
    """Sample a window starting at ``t`` that covers every vertex outside
    ``W`` after time ``t`` (or ``until``, if later).

    The window length starts at ``initial_length`` (default ``|V|/|W|``)
    and doubles; piece ``k`` uses the stream ``derive_seed(seed, k)``.
    """
    w, mask = _w_mask(g.n, w_set)
    root = kernel_seed(seed) if not isinstance(seed, (int, np.integer)) else int(seed)
    length = float(initial_length or max(1.0, g.n / w.size))
    end = t + length
    if until is not None:
        end = max(end, float(until))
    sample = sample_window(g, w, t, end, derive_seed(root, 0))
    for k in range(1, max_doublings + 1):
        *_, missing = K.first_visits_kernel(sample.verts, sample.edges, sample.voff,
                                            sample.first_index(t), mask, g.n, True)
        if missing == 0:
            return sample
        span = sample.window[1] - t
        sample = extend_window(sample, g, t + 2 * span, derive_seed(root, k))
    raise CoverageExhausted("window did not cover the vertex set")


def _visits(sample, t, stop):
    if t < sample.window[0]:
        raise ValueError(f"time {t} precedes the window start {sample.window[0]}")
    return K.first_visits_kernel(sample.verts, sample.edges, sample.voff,
                                 sample.first_index(t), sample.w_mask, sample.n, stop)


def _check_sample(sample, g, w_set):
    if g is not None and g.n != sample.n:
        raise ValueError("sample and network differ in size")
    if w_set is not None and not np.array_equal(as_vertex_set(w_set, sample.n), sample.w_set):
        raise ValueError("w_set differs from the sample's W")


def ab_forest(sample: InterlacementSample, g: Network | None = None, w_set=None,
              t: float = 0.0, return_sigma: bool = False):
    """The forest AB_W(t): every vertex outside ``W`` points back along the
    first edge that enters it after time ``t``; roots are ``W``.

    With ``return_sigma=True`` also returns the index of the first
    trajectory after ``t`` leaving each vertex (-1 where undecided).
    """
    _check_sample(sample, g, w_set)
    sig, parent, pedge, missing = _visits(sample, t, not return_sigma)
    if missing:
        raise CoverageExhausted(f"{missing} vertices outside W are not visited after t={t}")
    forest = OrientedForest(parent, pedge, sample.w_set)
    return (forest, sig) if return_sigma else forest


def sample_ab_forest(g: Network, w_set, t: float = 0.0, seed=None) -> OrientedForest:
    """AB_W(t) from a freshly sampled, automatically extended window."""
    return ab_forest(sample_covering(g, w_set, t, seed), t=t)


def ab_forest_batch(g: Network, w_set, reps: int, seed=None):
    """``reps`` independent AB_W(t) forests in one compiled call.

    The process after ``t`` is generated forward with Exp(1) gaps between
    trajectories, which is the same point process as a Poisson window
    extended without bound.  Returns ``(parents, parent_edges, sigma - t)``,
    each of shape ``(reps, n)``; sigma is ``inf`` for vertices of ``W``
    not left before the last vertex outside ``W`` was reached.
    """
    w, mask = _w_mask(g.n, w_set)
    return K.ab_stream_kernel(g.indptr, g.nbr, g.cumw, g.slot_edge, w,
                              np.cumsum(g.degrees[w]), mask, int(reps), kernel_seed(seed))


def sigma(sample: InterlacementSample, v: int, t: float) -> float:
    """First time at or after ``t`` at which a trajectory leaves ``v``.

    For ``v`` in ``W`` this means a trajectory that starts at ``v``.
    """
    sig = _visits(sample, t, False)[0]
    if sig[v] < 0:
        raise CoverageExhausted(f"vertex {v} is not left by any trajectory after t={t}")
    return float(sample.times[sig[v]])


def first_entry_edge(sample: InterlacementSample, v: int, t: float):
    """``(tail, head, edge id)`` of the first trajectory edge entering ``v``
    after time ``t``; ``v`` must lie outside ``W``."""
    if sample.w_mask[v]:
        raise ValueError("first-entry edges are defined for vertices outside W")
    _, parent, pedge, _ = _visits(sample, t, False)
    if parent[v] < 0:
        raise CoverageExhausted(f"vertex {v} is not visited after t={t}")
    return int(parent[v]), int(v), int(pedge[v])


def interlacement_set(sample: InterlacementSample, a: float, b: float) -> np.ndarray:
    """Vertices left by some trajectory with timestamp in ``[a, b]``."""
    if not (sample.window[0] <= a <= b <= sample.window[1]):
        raise ValueError("[a, b] must lie inside the window")
    sig = _visits(sample, a, False)[0]
    ok = sig >= 0
    ok[ok] = sample.times[sig[ok]] <= b
    return np.flatnonzero(ok)


def time_shift(sample: InterlacementSample, x: float) -> InterlacementSample:
    """Move every timestamp (and the window) by ``x``."""
    a, b = sample.window
    return InterlacementSample(sample.times + x, sample.verts, sample.edges, sample.voff,
                               (a + x, b + x), sample.w_set, sample.n)


def write_event_log(sample: InterlacementSample, path) -> None:
    """CSV with one ``timestamp,v0 v1 ... vl`` line per trajectory."""
    with open(path, "w") as fh:
        fh.write("timestamp,vertices\n")
        for i, t in enumerate(sample.times.tolist()):
            vs = sample.verts[sample.voff[i]:sample.voff[i + 1]]
            fh.write(f"{t!r},{' '.join(map(str, vs.tolist()))}\n")


# -- pasts, heights and balls ---------------------------------------------

def forest_roots(forest: OrientedForest) -> np.ndarray:
    """Root reached from every vertex."""
    return K.root_of_kernel(forest.parent)


class TailTable(NamedTuple):
    ell: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    reps: int


def _forest_sampler(g, roots, method, seed):
    if method == "wilson":
        return lambda i: wilson(g, roots, seed=derive_seed(seed, i), lazy=False)
    if method == "interlacement":
        return lambda i: sample_ab_forest(g, roots, 0.0, seed=derive_seed(seed, i))
    raise ValueError(f"unknown method {method!r}")


def past_height_tail(g: Network, w_set, u: int, ell_values, reps: int = 1000, seed=0,
                     method: str = "wilson") -> TailTable:
    """Empirical ``P(h(past of u in T_{W+u}) >= l)`` for each ``l``.

    ``method='interlacement'`` reads the forests off the interlacement
    process instead of Wilson's algorithm; both have the same law.
    """
    if reps < 1:
        raise ValueError("reps must be positive")
    ells = np.asarray(ell_values, dtype=np.int64)
    roots = np.union1d(as_vertex_set(w_set, g.n), [int(u)])
    draw = _forest_sampler(g, roots, method, seed)
    h = np.array([draw(i).heights()[u] for i in range(reps)])
    q = (h[:, None] >= ells[None, :]).mean(axis=0)
    return TailTable(ells, q, np.sqrt(q * (1 - q) / reps), reps)


class BallGrowth(NamedTuple):
    ell: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    bound: np.ndarray | None
    reps: int


def ball_growth(g: Network, w_set, u: int, ell, reps: int = 1000, seed=0,
                with_bound: bool = True, method: str = "wilson") -> BallGrowth:
    """Mean size of the radius-``l`` ball around ``u`` in ``T_W``.

    ``u`` must lie in ``W``; the ball is the set of vertices whose path to
    ``W`` ends at ``u`` within ``l`` steps.  The bound reported next to it is
    ``8 * D * l * B_W`` with ``D`` the degree ratio and ``B_W`` the W-bubble
    sum.
    """
    w = as_vertex_set(w_set, g.n)
    if int(u) not in set(w.tolist()):
        raise ValueError("u must belong to W")
    ells = np.atleast_1d(np.asarray(ell, dtype=np.int64))
    draw = _forest_sampler(g, w, method, seed)
    sizes = np.empty((reps, ells.size))
    for i in range(reps):
        f = draw(i)
        mine = forest_roots(f) == u
        depth = f.depth()[mine]
        sizes[i] = (depth[:, None] <= ells[None, :]).sum(axis=0)
    mean = sizes.mean(axis=0)
    err = sizes.std(axis=0, ddof=1) / np.sqrt(reps) if reps > 1 else np.full(ells.size, np.nan)
    bound = 8 * g.balance * ells * w_bubble_sum(g, w) if with_bound else None
    return BallGrowth(ells, mean, err, bound, reps)
