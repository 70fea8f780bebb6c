"""Lazy random walks and the exact or sampled potential theory built on them.

Exact quantities use the lazy kernel ``P = (I + D^-1 A) / 2``.  Diagonal
return probabilities and mixing deviations go through the eigendecomposition
of the symmetrised kernel ``D^1/2 P D^-1/2``; hitting-type quantities use
sparse forward iteration or linear solves.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from . import _kernels as K
from .network import GraphError, Network, as_vertex_set
from .seeding import as_generator, kernel_seed

__all__ = [
    "Walk",
    "WalkLaw",
    "Estimate",
    "BubbleSum",
    "HittingReport",
    "BackendCapExceeded",
    "DENSE_CAP",
    "SPARSE_CAP",
    "lazy_step",
    "lazy_walk",
    "walk_until",
    "sample_stationary",
    "lazy_kernel",
    "transition_row",
    "transition_probability",
    "transition_matrix",
    "uniform_deviation",
    "uniform_mixing_time",
    "tv_distance",
    "bubble_sum",
    "capacity",
    "capacity_curve",
    "closeness",
    "green_killed",
    "hitting_times",
    "hitting_time_matrix",
    "m_w",
    "effective_conductance",
    "w_bubble_sum",
    "killed_return_probabilities",
    "target_time",
    "hitting_probability_lower",
]

DENSE_CAP = 4096
SPARSE_CAP = 65536


class BackendCapExceeded(RuntimeError):
    """The exact backend refuses networks above its size cap."""


def _check_cap(g, cap, what):
    if g.n > cap:
        raise BackendCapExceeded(f"{what}: n={g.n} exceeds the exact-backend cap {cap}")


# -- walks --------------------------------------------------------------

@dataclass(frozen=True)
class Walk:
    """A finite walk ``(X_0, ..., X_L)``.

    ``edges[t]`` is the id of the edge used between ``X_t`` and ``X_{t+1}``,
    or -1 for a lazy step.  Edge ids may be omitted.
    """

    vertices: np.ndarray
    edges: np.ndarray | None = None
    network: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=np.int64))
        if self.vertices.size == 0:
            raise ValueError("a walk has at least one vertex")
        if self.edges is not None:
            object.__setattr__(self, "edges", np.asarray(self.edges, dtype=np.int64))

    @property
    def length(self) -> int:
        return self.vertices.size - 1

    def __len__(self):
        return self.vertices.size

    def __getitem__(self, i):
        return self.vertices[i]

    def __iter__(self):
        return iter(self.vertices.tolist())

    def index_range(self, a, b, closed=True):
        """Integer indices of ``X[a, b]`` (or ``X[a, b)``), clipped to ``[0, L]``."""
        lo = max(math.ceil(a), 0)
        hi = math.floor(b) if closed else math.ceil(b) - 1
        hi = min(hi, self.length)
        return lo, hi

    def slice(self, a, b, closed=True) -> "Walk":
        """``X[a, b]`` over the integers ``ceil(a) .. floor(b)``; with
        ``closed=False`` the right end is excluded.  May be empty, in which
        case ``None`` is returned."""
        lo, hi = self.index_range(a, b, closed)
        if hi < lo:
            return None
        edges = None if self.edges is None else self.edges[lo:hi]
        return Walk(self.vertices[lo:hi + 1], edges, self.network)

    def reversed(self) -> "Walk":
        edges = None if self.edges is None else self.edges[::-1]
        return Walk(self.vertices[::-1], edges, self.network)

    def vertex_set(self) -> np.ndarray:
        return np.unique(self.vertices)

    def is_valid(self, g: Network) -> bool:
        """Consecutive vertices are equal or joined by the recorded edge."""
        x = self.vertices
        for t in range(self.length):
            a, b = int(x[t]), int(x[t + 1])
            e = -1 if self.edges is None else int(self.edges[t])
            if e >= 0:
                if {a, b} != set(g.edge_endpoints(e)):
                    return False
            elif a != b and b not in g.neighbors(a)[0]:
                return False
        return True


@dataclass(frozen=True)
class WalkLaw:
    """Backend selection for estimators: ``exact`` or ``monte-carlo``."""

    backend: str = "exact"
    samples: int = 10_000
    seed: object = None
    cap: int = DENSE_CAP

    def __post_init__(self):
        if self.backend not in ("exact", "monte-carlo"):
            raise ValueError(f"unknown backend {self.backend!r}")


class Estimate(NamedTuple):
    estimate: float
    stderr: float
    samples: int


def _binomial_estimate(hits, samples):
    p = hits / samples
    return Estimate(p, math.sqrt(max(p * (1 - p), 0.0) / samples), samples)


def _kargs(g):
    return g.indptr, g.nbr, g.cumw, g.slot_edge


def lazy_step(g: Network, v: int, rng) -> int:
    """One step of the lazy walk: stay with probability 1/2, otherwise cross
    an incident edge chosen proportionally to its weight."""
    rng = as_generator(rng)
    if rng.random() < 0.5:
        return int(v)
    lo, hi = g.indptr[v], g.indptr[v + 1]
    if hi == lo:
        raise GraphError(f"vertex {v} is isolated")
    x = rng.random() * g.cumw[hi - 1]
    k = lo + int(np.searchsorted(g.cumw[lo:hi], x, side="right"))
    return int(g.nbr[min(k, hi - 1)])


def lazy_walk(g: Network, start: int, length: int, seed=None, lazy=True) -> Walk:
    v, e = K.walk_fixed_kernel(*_kargs(g), int(start), int(length), bool(lazy),
                               kernel_seed(seed))
    return Walk(v, e, g.name)


def walk_until(g: Network, start: int, targets, seed=None, lazy=True,
               max_steps=None) -> Walk:
    """Walk from ``start`` until it first hits ``targets`` (inclusive)."""
    mask = np.zeros(g.n, dtype=np.bool_)
    mask[as_vertex_set(targets, g.n)] = True
    v, e = K.walk_until_kernel(*_kargs(g), int(start), mask, bool(lazy),
                               -1 if max_steps is None else int(max_steps),
                               kernel_seed(seed))
    return Walk(v, e, g.name)


def sample_stationary(g: Network, rng, size=None):
    """Exact draws from the stationary law by inverse CDF over degrees."""
    rng = as_generator(rng)
    cdf = np.cumsum(g.degrees)
    x = rng.random(size) * cdf[-1]
    out = np.minimum(np.searchsorted(cdf, x, side="right"), g.n - 1)
    return int(out) if size is None else out.astype(np.int64)


# -- exact kernels ------------------------------------------------------

def lazy_kernel(g: Network) -> sparse.csr_matrix:
    A = g.adjacency()
    Dinv = sparse.diags(1.0 / g.degrees)
    return (0.5 * sparse.identity(g.n, format="csr") + 0.5 * (Dinv @ A)).tocsr()


def _nonlazy_kernel(g: Network) -> sparse.csr_matrix:
    return (sparse.diags(1.0 / g.degrees) @ g.adjacency()).tocsr()


def transition_row(g: Network, u: int, t: int) -> np.ndarray:
    """The law of ``X_t`` for the lazy walk started at ``u`` (sparse iteration)."""
    _check_cap(g, SPARSE_CAP, "transition_row")
    PT = lazy_kernel(g).T.tocsr()
    mu = np.zeros(g.n)
    mu[u] = 1.0
    for _ in range(int(t)):
        mu = PT @ mu
    return mu


def transition_probability(g: Network, u: int, v: int, t: int) -> float:
    """``p^t(u, v)`` for the lazy walk."""
    return float(transition_row(g, u, t)[v])


class _Spectral:
    """Eigendecomposition of the symmetrised lazy kernel on a vertex subset."""

    def __init__(self, g: Network, keep=None):
        _check_cap(g, DENSE_CAP, "spectral decomposition")
        keep = np.arange(g.n) if keep is None else keep
        A = g.adjacency()[keep][:, keep].toarray()
        s = 1.0 / np.sqrt(g.degrees[keep])
        S = 0.5 * np.eye(keep.size) + 0.5 * (s[:, None] * A * s[None, :])
        lam, phi = linalg.eigh(S)
        self.keep = keep
        self.lam = np.clip(lam, 0.0, 1.0)
        self.phi = phi
        self.phi2 = phi * phi
        self.sqrt_deg = np.sqrt(g.degrees[keep])

    def diagonal_max(self, times):
        """``max_v p^t(v, v)`` for each requested ``t``."""
        times = np.asarray(times)
        out = np.empty(times.size)
        chunk = max(1, 2_000_000 // max(self.lam.size, 1))
        for i in range(0, times.size, chunk):
            tt = times[i:i + chunk]
            powers = self.lam[:, None] ** tt[None, :]
            out[i:i + chunk] = (self.phi2 @ powers).max(axis=0)
        return out


def transition_matrix(g: Network, t: int) -> np.ndarray:
    """Dense ``p^t(u, v)`` for all pairs."""
    sp = _Spectral(g)
    St = (sp.phi * sp.lam ** t) @ sp.phi.T
    return St * (sp.sqrt_deg[None, :] / sp.sqrt_deg[:, None])


def _deviation(sp: _Spectral, total_degree, top, t):
    lam = sp.lam.copy()
    lam[top] = 0.0
    if t == 0:
        powers = np.where(np.arange(lam.size) == top, 0.0, 1.0)
    else:
        powers = lam ** t
    M = (sp.phi * powers) @ sp.phi.T
    M *= total_degree / np.outer(sp.sqrt_deg, sp.sqrt_deg)
    return float(np.abs(M).max())


def uniform_deviation(g: Network, t: int) -> float:
    """``max_{u,v} |p^t(u,v)/pi(v) - 1|``."""
    sp = _Spectral(g)
    return _deviation(sp, g.total_degree, int(np.argmax(sp.lam)), int(t))


def uniform_mixing_time(g: Network, threshold: float = 0.5) -> int:
    """Smallest ``t`` with ``max_{u,v} |p^t(u,v)/pi(v) - 1| <= 1/2``."""
    if g.n == 1:
        return 0
    sp = _Spectral(g)
    top = int(np.argmax(sp.lam))

    def ok(t):
        return _deviation(sp, g.total_degree, top, t) <= threshold

    if ok(0):
        return 0
    hi = 1
    while not ok(hi):
        hi *= 2
    lo = hi // 2  # ok(lo) is false
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    if not ok(hi + 1):
        raise AssertionError("uniform deviation not monotone past the mixing time")
    return hi


def tv_distance(mu, nu) -> float:
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise ValueError("distributions have different supports")
    for p in (mu, nu):
        if abs(p.sum() - 1.0) > 1e-9 or np.any(p < -1e-15):
            raise ValueError("argument is not a probability vector")
    return 0.5 * float(np.abs(mu - nu).sum())


class BubbleSum(NamedTuple):
    value: float
    up_to_sqrt_n: float
    t_mix: int


def bubble_sum(g: Network) -> BubbleSum:
    """``sum_{t=0}^{t_mix} (t+1) max_v p^t(v,v)``, plus the same sum cut at
    ``floor(sqrt(n))`` instead of the mixing time."""
    t_mix = uniform_mixing_time(g)
    sp = _Spectral(g)
    horizon = max(t_mix, math.isqrt(g.n))
    t = np.arange(horizon + 1)
    terms = (t + 1) * sp.diagonal_max(t)
    return BubbleSum(float(terms[: t_mix + 1].sum()),
                     float(terms[: math.isqrt(g.n) + 1].sum()), t_mix)


# -- hitting, capacity, closeness ---------------------------------------

def _mask(g, vertices, name="set"):
    vs = as_vertex_set(vertices, g.n)
    if vs.size == 0:
        raise ValueError(f"{name} must be nonempty")
    m = np.zeros(g.n, dtype=bool)
    m[vs] = True
    return m


def capacity_curve(g: Network, u_set, r_max: int) -> np.ndarray:
    """Exact ``Cap_r(U)`` for ``r = 1..r_max`` (index ``r - 1``)."""
    _check_cap(g, SPARSE_CAP, "capacity")
    inside = _mask(g, u_set, "U")
    PT = lazy_kernel(g).T.tocsr()
    mu = np.where(inside, 0.0, g.stationary)
    out = np.empty(int(r_max))
    out[0] = 1.0 - mu.sum()
    for k in range(1, int(r_max)):
        mu = PT @ mu
        mu[inside] = 0.0
        out[k] = 1.0 - mu.sum()
    return np.clip(out, 0.0, 1.0)


def _mc_walks(g, law, length, rng):
    starts = sample_stationary(g, rng, law.samples)
    return K.many_walks_kernel(g.indptr, g.nbr, g.cumw, starts, int(length), True,
                               kernel_seed(rng))


def capacity(g: Network, u_set, r: int, law: WalkLaw | None = None):
    """``Cap_r(U) = P_pi(tau_U < r)``.

    Returns a float for the exact backend and an :class:`Estimate` for the
    Monte Carlo one.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    law = law or WalkLaw()
    if law.backend == "exact":
        return float(capacity_curve(g, u_set, r)[-1])
    inside = _mask(g, u_set, "U")
    rng = as_generator(law.seed)
    walks = _mc_walks(g, law, r - 1, rng)
    hits = int(inside[walks].any(axis=1).sum())
    return _binomial_estimate(hits, law.samples)


def closeness(g: Network, u1_set, u2_set, r: int, law: WalkLaw | None = None):
    """``P_pi(tau_U1 < r and tau_U2 < r)`` for a single lazy walk."""
    if r < 1:
        raise ValueError("r must be at least 1")
    law = law or WalkLaw()
    a = _mask(g, u1_set, "U1")
    b = _mask(g, u2_set, "U2")
    if law.backend == "monte-carlo":
        rng = as_generator(law.seed)
        walks = _mc_walks(g, law, r - 1, rng)
        hits = int((a[walks].any(axis=1) & b[walks].any(axis=1)).sum())
        return _binomial_estimate(hits, law.samples)
    _check_cap(g, SPARSE_CAP, "closeness")
    PT = lazy_kernel(g).T.tocsr()
    na, nb = ~a, ~b
    pi = g.stationary
    # mass by (hit U1 yet, hit U2 yet); mass with both flags is absorbed
    m00, m10, m01 = pi * na * nb, pi * a * nb, pi * na * b
    done = float((pi * a * b).sum())
    for _ in range(int(r) - 1):
        m00, m10, m01 = PT @ m00, PT @ m10, PT @ m01
        done += float((m10 * b).sum() + (m01 * a).sum() + (m00 * a * b).sum())
        m10, m01, m00 = (m10 + m00 * a) * nb, (m01 + m00 * b) * na, m00 * na * nb
    return min(max(done, 0.0), 1.0)


def _killed_dense(g, w_mask):
    keep = np.flatnonzero(~w_mask)
    Q = lazy_kernel(g)[keep][:, keep].toarray()
    return keep, Q


def green_killed(g: Network, w_set) -> np.ndarray:
    """Green function of the lazy walk killed on ``W``:
    ``G_W(u, v) = E_u[#{t < tau_W : X_t = v}]`` as a dense ``n x n`` array."""
    _check_cap(g, DENSE_CAP, "green_killed")
    w = _mask(g, w_set, "W")
    keep, Q = _killed_dense(g, w)
    G = np.zeros((g.n, g.n))
    if keep.size:
        G[np.ix_(keep, keep)] = linalg.solve(np.eye(keep.size) - Q, np.eye(keep.size))
    return G


def hitting_times(g: Network, targets) -> np.ndarray:
    """``E_u[tau_W]`` for every start ``u`` (lazy walk, sparse solve)."""
    _check_cap(g, SPARSE_CAP, "hitting_times")
    w = _mask(g, targets, "targets")
    keep = np.flatnonzero(~w)
    h = np.zeros(g.n)
    if keep.size:
        Q = lazy_kernel(g)[keep][:, keep]
        A = (sparse.identity(keep.size, format="csc") - Q).tocsc()
        h[keep] = splinalg.spsolve(A, np.ones(keep.size))
    return h


def hitting_time_matrix(g: Network, method: str = "solve") -> np.ndarray:
    """``H[u, v] = E_u[tau_v]`` for the lazy walk.

    ``solve`` does one linear solve per target; ``fundamental`` uses
    ``(Z[v,v] - Z[u,v]) / pi(v)`` with ``Z = (I - P + 1 pi^T)^-1``.
    """
    _check_cap(g, DENSE_CAP, "hitting_time_matrix")
    n = g.n
    if method == "fundamental":
        P = lazy_kernel(g).toarray()
        pi = g.stationary
        Z = linalg.inv(np.eye(n) - P + np.outer(np.ones(n), pi))
        return (np.diag(Z)[None, :] - Z) / pi[None, :]
    if method != "solve":
        raise ValueError(f"unknown method {method!r}")
    P = lazy_kernel(g).toarray()
    H = np.zeros((n, n))
    idx = np.arange(n)
    for v in range(n):
        keep = idx != v
        A = np.eye(n - 1) - P[np.ix_(keep, keep)]
        H[keep, v] = linalg.solve(A, np.ones(n - 1))
    return H


def target_time(g: Network, u: int | None = None):
    """``sum_v pi(v) E_u[tau_v]``; for ``u=None`` the value for every start."""
    H = hitting_time_matrix(g, "solve")
    t = H @ g.stationary
    return t if u is None else float(t[u])


def m_w(g: Network, w_set, s_set) -> float:
    """``sum_{u,v in S} d(u) G_W(u, v)``."""
    s = as_vertex_set(s_set, g.n)
    if s.size == 0:
        return 0.0
    G = green_killed(g, w_set)
    return float((g.degrees[s][:, None] * G[np.ix_(s, s)]).sum())


def effective_conductance(g: Network, w_set, s_set) -> float:
    """Effective conductance between disjoint sets ``W`` and ``S``.

    Computed by first-step analysis: ``sum_{u in W} d(u) P_u(tau_S < tau_W^+)``
    for the non-lazy walk, i.e. the electrical normalisation where one unit
    edge has conductance 1.  The lazy walk's escape probability is half of
    the non-lazy one.
    """
    _check_cap(g, SPARSE_CAP, "effective_conductance")
    w = _mask(g, w_set, "W")
    s = _mask(g, s_set, "S")
    if np.any(w & s):
        raise ValueError("W and S must be disjoint")
    P = _nonlazy_kernel(g)
    interior = np.flatnonzero(~(w | s))
    h = s.astype(float)  # P_x(tau_S < tau_W)
    if interior.size:
        Q = P[interior][:, interior]
        rhs = np.asarray(P[interior][:, np.flatnonzero(s)].sum(axis=1)).ravel()
        A = (sparse.identity(interior.size, format="csc") - Q).tocsc()
        h[interior] = splinalg.spsolve(A, rhs)
    wi = np.flatnonzero(w)
    escape = P[wi] @ h
    return float((g.degrees[wi] * escape).sum())


def killed_return_probabilities(g: Network, w_set, times) -> np.ndarray:
    """``max_v p_W^t(v, v)`` for each ``t``; vertices of ``W`` contribute 0."""
    w = _mask(g, w_set, "W")
    keep = np.flatnonzero(~w)
    times = np.asarray(times)
    if keep.size == 0:
        return np.zeros(times.size)
    return _Spectral(g, keep).diagonal_max(times)


def w_bubble_sum(g: Network, w_set, tol: float = 1e-9, max_terms: int = 10_000_000) -> float:
    """``sum_{t>=0} (t+1) max_v p_W^t(v, v)`` with ``p_W`` the walk killed on ``W``.

    Summation stops once the geometric tail bound
    ``rho^N ((N+1)/(1-rho) + rho/(1-rho)^2)`` drops below ``tol``, where
    ``rho`` is the spectral radius of the killed kernel.
    """
    w = _mask(g, w_set, "W")
    keep = np.flatnonzero(~w)
    if keep.size == 0:
        return 0.0
    sp = _Spectral(g, keep)
    rho = float(sp.lam.max())
    if rho >= 1.0:
        raise AssertionError("killed kernel has spectral radius 1")
    total = 0.0
    start = 0
    block = 4096
    while start < max_terms:
        t = np.arange(start, start + block)
        total += float(((t + 1) * sp.diagonal_max(t)).sum())
        start += block
        tail = rho ** start * ((start + 1) / (1 - rho) + rho / (1 - rho) ** 2)
        if tail < tol:
            return total
    raise RuntimeError("W-bubble sum did not converge within max_terms")


@dataclass(frozen=True)
class HittingReport:
    hit_probability: float
    capacity: float
    bound: float
    holds: bool
    t_mix: int
    hypothesis_met: bool


def hitting_probability_lower(g: Network, u: int, u_set, t: int, r: int) -> HittingReport:
    """Compare ``P_u(tau_U < t)`` with ``Cap_r(U) / 3``.

    The comparison is only promised when ``r`` is much larger than
    ``log(n) * t_mix``; a warning is issued below that scale and the report
    records whether the inequality held anyway.
    """
    inside = _mask(g, u_set, "U")
    t_mix = uniform_mixing_time(g)
    hyp = r >= math.log(max(g.n, 2)) * max(t_mix, 1)
    if not hyp:
        warnings.warn(f"r={r} is below log(n)*t_mix={math.log(g.n) * t_mix:.1f}",
                      stacklevel=2)
    PT = lazy_kernel(g).T.tocsr()
    mu = np.zeros(g.n)
    mu[u] = 1.0
    mu[inside] = 0.0
    for _ in range(int(t) - 1):
        mu = PT @ mu
        mu[inside] = 0.0
    lhs = 1.0 - float(mu.sum()) if t >= 1 else 0.0
    cap = capacity(g, u_set, r)
    return HittingReport(lhs, cap, cap / 3, lhs >= cap / 3 - 1e-12, t_mix, hyp)
