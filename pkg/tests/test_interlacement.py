import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

import ustlab as u
from oracles import chi_square_fits, random_connected, same_law
from ustlab.interlacement import CoverageExhausted


def harmonic_endpoints(g, W):
    """Exact law of a trajectory's last vertex: a d-weighted start in W, one
    step, then the non-lazy chain absorbed in W."""
    n = g.n
    A = g.adjacency().toarray()
    P = A / A.sum(axis=1, keepdims=True)
    inW = np.zeros(n, bool)
    inW[W] = True
    out = ~inW
    H = np.zeros((n, n))
    H[np.flatnonzero(inW), np.flatnonzero(inW)] = 1.0
    # absorption probabilities from the vertices outside W
    Q = P[np.ix_(out, out)]
    R = P[np.ix_(out, inW)]
    B = np.linalg.solve(np.eye(out.sum()) - Q, R)
    H[np.ix_(out, inW)] = B
    start = np.zeros(n)
    start[W] = g.degrees[W] / g.degrees[W].sum()
    return (start @ P @ H)[W]


def covered(sample, g, t, seed):
    # extend an existing window until AB_W(t) is decided
    k = 0
    while True:
        try:
            u.ab_forest(sample, t=t)
            return sample
        except CoverageExhausted:
            k += 1
            sample = u.extend_window(sample, g, 2 * sample.window[1], seed=u.derive_seed(seed, k))


def sigma_times(sample, t):
    forest, sig = u.ab_forest(sample, t=t, return_sigma=True)
    times = np.where(sig >= 0, sample.times[np.maximum(sig, 0)], np.inf)
    return forest, times


# -- trajectories -----------------------------------------------------------

def test_forced_trajectory_on_k2():
    g = u.make_complete(2)
    rng = np.random.default_rng(0)
    for _ in range(20):
        tr = u.sample_trajectory(g, [0], rng)
        assert tr.vertices.tolist() == [0, 1, 0] and tr.length == 2


def test_three_path_trajectory_law():
    g = u.make_path(3)
    rng = np.random.default_rng(1)
    reps = 20_000
    seen = Counter(tuple(u.sample_trajectory(g, [0, 2], rng).vertices.tolist()) for _ in range(reps))
    law = {(0, 1, 0): 0.25, (0, 1, 2): 0.25, (2, 1, 0): 0.25, (2, 1, 2): 0.25}
    assert chi_square_fits([k for k, c in seen.items() for _ in range(c)], law)[0]


def test_endpoint_law_matches_harmonic_measure():
    rng = np.random.default_rng(2)
    for i in range(4):
        g = random_connected(int(rng.integers(5, 17)), 8, rng)
        W = np.sort(rng.choice(g.n, 3, replace=False))
        exact = harmonic_endpoints(g, W)
        s = u.sample_window(g, W, 0, 20_000, seed=i)
        s.validate(g)
        ends = s.verts[s.voff[1:] - 1]
        obs = np.array([(ends == w).sum() for w in W])
        assert stats.chisquare(obs, exact * obs.sum()).pvalue > 1e-3


def test_trajectory_with_w_equal_to_v():
    g = u.make_complete(3)
    s = u.sample_window(g, [0, 1, 2], 0, 50, seed=3)
    s.validate(g)
    assert all(s.trajectory(i).length == 1 for i in range(len(s)))


def test_trajectory_validity_rules():
    g = u.make_path(3)
    mask = np.array([True, False, True])
    good = u.WTrajectory(np.array([0, 1, 2]), np.array([0, 1]))
    assert good.is_valid(g, mask)
    assert not u.WTrajectory(np.array([0, 1]), np.array([0])).is_valid(g, mask)
    assert not u.WTrajectory(np.array([0, 1, 2]), np.array([1, 0])).is_valid(g, mask)


# -- the Poisson timeline -----------------------------------------------------

def test_poisson_event_count():
    g = u.make_hypercube(4)
    counts = np.array([len(u.sample_window(g, [0, 5], 0, 5, seed=s)) for s in range(10_000)])
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - 5) < 4 * se
    assert abs(counts.var(ddof=1) - 5) < 0.3


def test_tiny_window_and_bad_window():
    g = u.make_cycle(6)
    assert len(u.sample_window(g, [0], 0, 1e-12, seed=0)) == 0
    with pytest.raises(ValueError):
        u.sample_window(g, [0], 1, 1)
    with pytest.raises(ValueError):
        u.sample_window(g, [], 0, 1)


def test_restriction_consistency():
    g = u.make_cycle(8)
    a = [len(u.sample_window(g, [0], 0, 2, seed=s).restrict(0, 1)) for s in range(3000)]
    b = [len(u.sample_window(g, [0], 0, 1, seed=10_000 + s)) for s in range(3000)]
    assert stats.ks_2samp(a, b).pvalue > 1e-3
    s = u.sample_window(g, [0], 0, 10, seed=1)
    r = s.restrict(2, 7)
    assert np.all((r.times >= 2) & (r.times <= 7))
    assert len(r) == int(((s.times >= 2) & (s.times <= 7)).sum())
    r.validate(g)
    for i in range(len(r)):
        j = s.first_index(r.times[i])
        np.testing.assert_array_equal(r.trajectory(i).vertices, s.trajectory(j).vertices)
    with pytest.raises(ValueError):
        s.restrict(5, 11)


def test_sample_is_immutable_and_times_increase():
    g = u.make_cycle(8)
    s = u.sample_window(g, [0], 0, 30, seed=2)
    assert np.all(np.diff(s.times) > 0)
    with pytest.raises(ValueError):
        s.times[0] = 1.0
    with pytest.raises(ValueError):
        u.InterlacementSample([1.0, 1.0], [0, 1, 0, 0, 1, 0], [0, 0, 0, 0], [0, 3, 6],
                              (0, 2), [0], 8)


def test_extend_and_covering():
    g = u.make_torus(2, 5)
    s = u.sample_window(g, [0], 0, 1, seed=0)
    e = u.extend_window(s, g, 4, seed=1)
    assert e.window == (0.0, 4.0)
    np.testing.assert_array_equal(e.times[: len(s)], s.times)
    c = u.sample_covering(g, [0], t=2.5, seed=3)
    assert c.window[0] == 2.5
    u.ab_forest(c, t=2.5).validate(g)
    c2 = u.sample_covering(g, [0], t=2.5, seed=3)
    np.testing.assert_array_equal(c.verts, c2.verts)
    with pytest.raises(CoverageExhausted):
        u.ab_forest(u.sample_window(g, [0], 0, 0.1, seed=0))


# -- AB forests ----------------------------------------------------------------

def test_ab_forest_three_path():
    g = u.make_path(3)
    keys = [u.tree_key(u.sample_ab_forest(g, [0, 2], seed=s)) for s in range(4000)]
    law = u.ust_distribution(u.contract(g, [0, 2]))
    assert set(law) == {(0,), (1,)}
    assert chi_square_fits(keys, law)[0]


@pytest.mark.parametrize("make,W", [(lambda: u.make_complete(4), [0]),
                                    (lambda: u.make_cycle(5), [2]),
                                    (lambda: u.make_path(3), [0, 2])])
def test_ab_batch_matches_wilson_and_exact(make, W):
    g = make()
    law = u.ust_distribution(u.contract(g, W))
    parents, pedges, _ = u.ab_forest_batch(g, W, 20_000, seed=5)
    ab = u.tree_keys(pedges)
    wi = u.tree_keys(u.wilson_batch(g, W, 20_000, seed=6)[1])
    assert chi_square_fits(ab, law)[0]
    assert same_law(ab, wi)[0]
    for i in range(100):
        u.OrientedForest(parents[i], pedges[i], W).validate(g)


def test_window_and_batch_samplers_have_equal_law():
    g = u.make_complete(4)
    window = [u.tree_key(u.sample_ab_forest(g, [1], seed=s)) for s in range(5000)]
    batch = u.tree_keys(u.ab_forest_batch(g, [1], 5000, seed=7)[1])
    assert same_law(window, batch)[0]


def test_ab_forest_argument_checks():
    g = u.make_cycle(5)
    s = u.sample_covering(g, [0], seed=0)
    with pytest.raises(ValueError):
        u.ab_forest(s, g=u.make_cycle(6))
    with pytest.raises(ValueError):
        u.ab_forest(s, w_set=[1])
    with pytest.raises(ValueError):
        u.ab_forest(s, t=-1.0)


def test_first_entry_edge_matches_forest():
    g = u.make_hypercube(4)
    s = u.sample_covering(g, [0, 15], t=1.0, seed=4)
    f = u.ab_forest(s, t=1.0)
    for v in range(1, 15):
        tail, head, e = u.first_entry_edge(s, v, 1.0)
        assert head == v and f.parent[v] == tail and f.parent_edge[v] == e
    with pytest.raises(ValueError):
        u.first_entry_edge(s, 0, 1.0)


def test_sigma_definitions():
    g = u.make_cycle(6)
    s = u.sample_covering(g, [0], t=0.0, seed=2)
    first = s.trajectory(0)
    for v in first.vertices[:-1].tolist():
        assert u.sigma(s, v, 0.0) == s.times[0]
    for v in range(g.n):
        assert u.sigma(s, v, 0.0) >= 0.0
    # for W, only trajectories that start at v count
    starts = s.verts[s.voff[:-1]]
    assert u.sigma(s, 0, 0.0) == s.times[np.flatnonzero(starts == 0)[0]]
    with pytest.raises(CoverageExhausted):
        u.sigma(u.sample_window(g, [0], 0, 1e-9, seed=0), 3, 0.0)


def test_interlacement_set_matches_scan():
    rng = np.random.default_rng(8)
    for i in range(20):
        g = random_connected(int(rng.integers(4, 20)), 6, rng)
        W = rng.choice(g.n, 2, replace=False)
        s = u.sample_window(g, W, 0, 6, seed=i)
        a, b = sorted(rng.uniform(0, 6, 2))
        scan = set()
        for t, tr in s.events:
            if a <= t <= b:
                scan |= set(tr.vertices[:-1].tolist())
        assert u.interlacement_set(s, a, b).tolist() == sorted(scan)


def test_chronology_along_forest_paths():
    rng = np.random.default_rng(9)
    for i in range(200):
        g = random_connected(int(rng.integers(3, 15)), 6, rng)
        W = rng.choice(g.n, int(rng.integers(1, 3)), replace=False)
        t = float(rng.uniform(0, 3))
        s = covered(u.sample_window(g, W, 0, 5, seed=i), g, t, i)
        forest, sig = sigma_times(s, t)
        kids = np.flatnonzero(forest.parent >= 0)
        assert np.all(sig[kids] >= sig[forest.parent[kids]])
        assert np.all(sig >= t)


def test_pasts_grow_when_vertex_is_idle():
    rng = np.random.default_rng(10)
    checked = 0
    for i in range(200):
        g = random_connected(int(rng.integers(3, 12)), 5, rng)
        W = rng.choice(g.n, int(rng.integers(1, 3)), replace=False)
        a, b = 0.0, float(rng.uniform(0, 2))
        s = covered(u.sample_window(g, W, 0, 3, seed=i), g, b, i)
        fa, fb = u.ab_forest(s, t=a), u.ab_forest(s, t=b)
        busy = set(u.interlacement_set(s, a, b).tolist())
        for v in range(g.n):
            if v not in busy:
                checked += 1
                assert set(u.past(fa, v).tolist()) <= set(u.past(fb, v).tolist())
    assert checked > 100


# -- time shifts -----------------------------------------------------------------

def test_time_shift_exact():
    g = u.make_complete(5)
    s = u.sample_covering(g, [0], t=1.0, seed=11)
    assert np.array_equal(u.time_shift(s, 0.0).times, s.times)
    for x in (0.5, 3.0, -0.75):
        sh = u.time_shift(s, x)
        np.testing.assert_allclose(sh.times, s.times + x)
        f, h = u.ab_forest(s, t=1.0), u.ab_forest(sh, t=1.0 + x)
        np.testing.assert_array_equal(f.parent_edge, h.parent_edge)


@pytest.mark.parametrize("x", [0.5, 3.0])
def test_time_shift_law(x):
    g = u.make_complete(4)
    at0 = [u.tree_key(u.sample_ab_forest(g, [0], 0.0, seed=s)) for s in range(3000)]
    atx = [u.tree_key(u.sample_ab_forest(g, [0], x, seed=50_000 + s)) for s in range(3000)]
    assert same_law(at0, atx)[0]


# -- pasts, heights, balls ----------------------------------------------------

def test_past_height_tail():
    g = u.make_torus(2, 6)
    W = [0, 1, 2]
    tab = u.past_height_tail(g, W, 21, [1, 2, 4, 8, 40], reps=2000, seed=1)
    assert np.all(np.diff(tab.estimate) <= 0)
    assert tab.estimate[-1] == 0 and tab.estimate[0] <= 1
    alt = u.past_height_tail(g, W, 21, [1, 2, 4, 8, 40], reps=2000, seed=2, method="interlacement")
    se = np.sqrt(tab.stderr ** 2 + alt.stderr ** 2)
    assert np.all(np.abs(tab.estimate - alt.estimate) <= 4 * se + 1e-12)
    with pytest.raises(ValueError):
        u.past_height_tail(g, W, 21, [1], reps=0)


def test_ball_growth():
    g = u.make_torus(5, 3)
    W = [0, 100, 200]
    res = u.ball_growth(g, W, 0, [0, 1, 2, 4, 8], reps=300, seed=3, with_bound=False)
    assert res.mean[0] == 1.0 and res.bound is None
    assert np.all(res.mean[2:] / res.mean[1:-1] <= 4)
    with pytest.raises(ValueError):
        u.ball_growth(g, W, 5, [1], reps=10)


def test_ball_growth_bound_on_hypercube():
    g = u.make_hypercube(8)
    W = [0, 37, 90, 129, 170, 200, 231, 255]
    res = u.ball_growth(g, W, 0, [4, 8, 16], reps=300, seed=4)
    assert np.all(res.mean + 4 * res.stderr < res.bound)


# -- wiring can only enlarge a past ----------------------------------------------

def past_height_law(g, roots, w):
    """Exact joint law of (future of w, height of the past of w) in T_roots."""
    out = Counter()
    for edges, p in u.ust_distribution(u.contract(g, roots)).items():
        f = u.forest_from_edges(g, edges, roots)
        out[(tuple(u.future(f, w).tolist()), u.height(f, w))] += p
    return out


def test_stochastic_domination_by_enumeration():
    rng = np.random.default_rng(12)
    for _ in range(6):
        g = random_connected(int(rng.integers(4, 8)), 4, rng)
        a, b, w = (int(x) for x in rng.choice(g.n, 3, replace=False))
        cond = past_height_law(g, [a, b], w)
        wired = past_height_law(g, [a, w], w)
        ells = range(1, g.n)
        rhs = {ell: sum(p for (_, h), p in wired.items() if h >= ell) for ell in ells}
        for phi in {f for f, _ in cond}:
            z = sum(p for (f, _), p in cond.items() if f == phi)
            for ell in ells:
                lhs = sum(p for (f, h), p in cond.items() if f == phi and h >= ell) / z
                assert lhs <= rhs[ell] + 1e-12


# -- output ----------------------------------------------------------------------

def test_event_log(tmp_path):
    g = u.make_cycle(5)
    s = u.sample_window(g, [0], 0, 4, seed=1)
    u.write_event_log(s, tmp_path / "log.csv")
    lines = (tmp_path / "log.csv").read_text().splitlines()
    assert lines[0] == "timestamp,vertices" and len(lines) == len(s) + 1
    for i, line in enumerate(lines[1:]):
        t, vs = line.split(",")
        assert float(t) == s.times[i]
        assert [int(v) for v in vs.split()] == s.trajectory(i).vertices.tolist()


def test_forest_roots():
    g = u.make_hypercube(5)
    f = u.wilson(g, [0, 31], seed=0)
    r = u.forest_roots(f)
    for v in range(g.n):
        assert r[v] == u.future(f, v)[-1]
