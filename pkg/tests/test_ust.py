import itertools
import math
from collections import Counter

import numpy as np
import pytest

import ustlab as u
from oracles import brute_trees, chi_square_fits, random_connected, same_law


# -- loop erasure and cut points ------------------------------------------

def naive_loop_erase(x):
    # erase cycles as they close, the textbook way
    path = []
    for v in x:
        if v in path:
            path = path[: path.index(v) + 1]
        else:
            path.append(v)
    return path


def naive_cut_times(x):
    L = len(x) - 1
    return [t for t in range(L) if not set(x[: t + 1]) & set(x[t + 1:])]


def test_loop_erase_examples():
    le = u.loop_erase([0, 1, 0, 2])
    assert le.path.tolist() == [0, 2]
    assert le.lambda_times.tolist() == [0, 3]
    le = u.loop_erase([4, 4, 4])
    assert le.path.tolist() == [4] and len(le) == 1
    assert u.loop_erase([3]).path.tolist() == [3]
    with pytest.raises(ValueError):
        u.loop_erase([])


def test_loop_erase_matches_naive_on_random_words():
    rng = np.random.default_rng(0)
    for _ in range(2000):
        x = rng.integers(0, 6, int(rng.integers(1, 25))).tolist()
        le = u.loop_erase(x)
        assert le.path.tolist() == naive_loop_erase(x)
        assert np.all(np.asarray(x)[le.lambda_times] == le.path)


def test_cut_times():
    assert u.cut_times([0, 1, 2, 0]).tolist() == []
    assert u.cut_times([0, 1, 2]).tolist() == [0, 1]
    assert u.cut_times([5]).tolist() == []
    assert u.cut_points([0, 1, 0, 2, 3]).tolist() == [0, 2]
    rng = np.random.default_rng(1)
    for _ in range(2000):
        x = rng.integers(0, 8, int(rng.integers(1, 30))).tolist()
        assert u.cut_times(x).tolist() == naive_cut_times(x)


def test_cut_points_lie_on_loop_erasure():
    g = u.make_torus(3, 5)
    for s in range(50):
        w = u.lazy_walk(g, 0, 200, seed=s)
        assert set(u.cut_points(w).tolist()) <= set(u.loop_erase(w).path.tolist())


def test_segment_decomposition():
    w = u.Walk(np.arange(23))
    segs = u.segment_decomposition(w, 10, 2)
    assert len(segs) == 2
    b, a = segs[1]
    assert b.vertices.tolist() == list(range(10, 18))
    assert a.vertices.tolist() == list(range(12, 16))
    with pytest.raises(ValueError):
        u.segment_decomposition(w, 6, 2)
    assert u.segment_decomposition(w, 30, 1) == []


# -- forests ---------------------------------------------------------------

def test_forest_queries_on_a_small_tree():
    # 0 <- 1 <- 2, 1 <- 3, 0 <- 4
    f = u.OrientedForest([-1, 0, 1, 1, 0], [-1, 0, 1, 2, 3])
    assert u.past(f, 1).tolist() == [1, 2, 3]
    assert u.future(f, 2).tolist() == [2, 1, 0]
    assert u.future(f, 2, exclude_roots=True).tolist() == [2, 1]
    assert u.height(f, 0) == 2 and u.height(f, 1) == 1 and u.height(f, 4) == 0
    assert u.height(f) == 2
    assert u.diameter(f) == 3
    assert u.tree_path(f, 2, 4).tolist() == [2, 1, 0, 4]
    assert u.tree_path(f, 3, 2).tolist() == [3, 1, 2]


def test_past_future_partition():
    g = u.make_hypercube(6)
    f = u.wilson(g, [0, 9, 40], seed=3)
    for v in range(g.n):
        fut = set(u.future(f, v).tolist())
        pst = set(u.past(f, v).tolist())
        assert fut & pst == {v}
    # pasts of the roots partition the vertex set
    blocks = [set(u.past(f, r).tolist()) for r in f.roots.tolist()]
    assert sum(map(len, blocks)) == g.n and set().union(*blocks) == set(range(g.n))


def test_diameter_cases():
    assert u.diameter(u.OrientedForest([-1], [-1])) == 0
    p = u.make_path(10)
    assert u.diameter(u.wilson(p, [4], seed=0)) == 9
    s = u.make_star(10)
    assert u.diameter(u.wilson(s, [3], seed=0)) == 2
    with pytest.raises(ValueError):
        u.diameter(u.wilson(p, [0, 9], seed=0))


def test_heights_match_bruteforce():
    g = u.make_torus(2, 6)
    f = u.wilson(g, [0, 20], seed=1)
    depth = f.depth()
    for v in range(g.n):
        assert f.heights()[v] == max(depth[x] for x in u.past(f, v)) - depth[v]


def test_validate():
    g = u.make_cycle(4)
    f = u.wilson(g, [0], seed=0)
    f.validate(g)
    with pytest.raises(AssertionError):
        u.OrientedForest([1, 0, 1, 2], [0, 0, 1, 2], roots=[]).validate()
    bad = u.OrientedForest(f.parent, np.roll(f.parent_edge, 1), f.roots)
    with pytest.raises(AssertionError):
        bad.validate(g)


def test_forest_io_round_trip(tmp_path):
    g = u.make_hypercube(5)
    f = u.wilson(g, [0, 31], seed=2)
    u.write_forest(f, tmp_path / "f.txt")
    h = u.read_forest(tmp_path / "f.txt")
    np.testing.assert_array_equal(h.parent, f.parent)
    np.testing.assert_array_equal(h.parent_edge, f.parent_edge)
    np.testing.assert_array_equal(h.roots, f.roots)


def test_forest_from_edges():
    g = u.make_cycle(5)
    f = u.forest_from_edges(g, [0, 1, 2, 3], [0])
    f.validate(g)
    assert u.tree_key(f) == (0, 1, 2, 3)
    with pytest.raises(u.GraphError):
        u.forest_from_edges(g, [0, 1], [0])


# -- samplers against exact laws ----------------------------------------

@pytest.mark.parametrize("make", [lambda: u.make_complete(4), lambda: u.make_cycle(4)])
def test_wilson_and_aldous_broder_fit_exact_law(make):
    g = make()
    law = u.ust_distribution(g)
    reps = 20_000
    keys_w = u.tree_keys(u.wilson_batch(g, [0], reps, seed=1)[1])
    keys_a = u.tree_keys(u.aldous_broder_batch(g, 2, reps, seed=2)[1])
    assert chi_square_fits(keys_w, law)[0]
    assert chi_square_fits(keys_a, law)[0]
    assert same_law(keys_w, keys_a)[0]


def test_single_sample_api_fits_law():
    g = u.make_complete(4)
    law = u.ust_distribution(g)
    keys = [u.tree_key(u.wilson(g, [1], seed=s)) for s in range(4000)]
    assert chi_square_fits(keys, law)[0]
    keys = [u.tree_key(u.aldous_broder(g, 0, seed=s)) for s in range(4000)]
    assert chi_square_fits(keys, law)[0]


def test_weighted_samplers_fit_exact_law():
    g = u.Network(4, [[0, 1], [1, 2], [2, 3], [3, 0], [0, 2]], [1.0, 2.0, 0.5, 1.0, 3.0])
    law = u.ust_distribution(g)
    assert law == pytest.approx(brute_trees(g))
    keys = u.tree_keys(u.wilson_batch(g, [3], 20_000, seed=4)[1])
    assert chi_square_fits(keys, law)[0]
    keys = u.tree_keys(u.aldous_broder_batch(g, 1, 20_000, seed=5)[1])
    assert chi_square_fits(keys, law)[0]


def test_lazy_and_non_lazy_wilson_have_equal_law():
    g = u.make_complete(4)
    a = u.tree_keys(u.wilson_batch(g, [0], 20_000, seed=6, lazy=True)[1])
    b = u.tree_keys(u.wilson_batch(g, [0], 20_000, seed=7, lazy=False)[1])
    assert same_law(a, b)[0]
    c = u.tree_keys(u.aldous_broder_batch(g, 0, 20_000, seed=8, lazy=True)[1])
    assert same_law(a, c)[0]


def test_wilson_vertex_order_invariance():
    g = u.make_cycle(5)
    law = u.ust_distribution(g)
    keys = [u.tree_key(u.wilson(g, [0], seed=s, vertex_order=[4, 2, 1, 3]))
            for s in range(5000)]
    assert chi_square_fits(keys, law)[0]
    with pytest.raises(ValueError):
        u.wilson(g, [0], vertex_order=[1, 2])


def test_wilson_root_set_matches_contracted_law():
    g = u.make_torus(2, 3)
    W = [0, 4]
    h = u.contract(g, W)
    law = u.ust_distribution(h)
    keys = u.tree_keys(u.wilson_batch(g, W, 20_000, seed=9)[1])
    assert chi_square_fits(keys, law)[0]


def test_samples_are_spanning_and_acyclic():
    rng = np.random.default_rng(10)
    for i in range(30):
        g = random_connected(int(rng.integers(2, 40)), 20, rng)
        u.wilson(g, [0], seed=i).validate(g)
        u.aldous_broder(g, g.n - 1, seed=i).validate(g)
        f = u.wilson(g, [0, g.n - 1], seed=i)
        f.validate(g)
        assert len(f.edge_set()) == g.n - f.roots.size


def test_aldous_broder_cover_time():
    g = u.make_complete(5)
    _, steps = u.aldous_broder(g, 0, seed=1, return_steps=True)
    assert steps >= 4


# -- LERW and the UST path law ------------------------------------------

def test_lerw_is_simple_and_ends_on_target():
    g = u.make_torus(2, 8)
    for s in range(50):
        path, edges = u.lerw(g, 0, [27, 45], seed=s)
        assert path[-1] in (27, 45) and len(set(path.tolist())) == path.size
        assert edges.size == path.size - 1
        for k, e in enumerate(edges.tolist()):
            assert set(g.edge_endpoints(e)) == {path[k], path[k + 1]}


def test_ust_path_marginals():
    c4 = u.make_cycle(4)
    ways = Counter(tuple(u.ust_path(c4, 0, 2, seed=s, lazy=False).tolist()) for s in range(8000))
    assert set(ways) == {(0, 1, 2), (0, 3, 2)}
    p = ways[(0, 1, 2)] / 8000
    assert abs(p - 0.5) < 4 * math.sqrt(0.25 / 8000)
    c5 = u.make_cycle(5)
    short = sum(len(u.ust_path(c5, 0, 2, seed=s)) == 3 for s in range(8000)) / 8000
    assert abs(short - 0.6) < 4 * math.sqrt(0.24 / 8000)
    with pytest.raises(ValueError):
        u.ust_path(c5, 1, 1)


# -- exact counting ---------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4, 5, 7])
def test_cayley_and_cycle_counts(n):
    assert u.spanning_tree_count(u.make_complete(n)) == n ** (n - 2)
    assert u.spanning_tree_count(u.make_cycle(n)) == n
    assert u.spanning_tree_count(u.make_path(n)) == 1


def test_count_matches_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(15):
        g = random_connected(int(rng.integers(2, 7)), 4, rng, weighted=False)
        assert u.spanning_tree_count(g) == len(u.enumerate_spanning_trees(g)) == len(brute_trees(g))
    g = u.Network(3, [[0, 1], [1, 2], [0, 2]], [0.5, 2.0, 1.0])
    assert u.spanning_tree_count(g) == pytest.approx(0.5 * 2 + 0.5 + 2)


def test_count_limits():
    with pytest.raises(ValueError):
        u.spanning_tree_count(u.make_cycle(70))
    assert u.spanning_tree_count(u.Network(1, np.zeros((0, 2), int))) == 1


# -- exact identities by enumeration ---------------------------------------

def edge_marginals(g):
    law = u.ust_distribution(g)
    return law, np.array([sum(p for t, p in law.items() if e in t) for e in range(g.m)])


def test_edge_marginal_is_weight_times_resistance():
    rng = np.random.default_rng(12)
    for _ in range(5):
        g = random_connected(int(rng.integers(3, 7)), 4, rng)
        _, marg = edge_marginals(g)
        for e in range(g.m):
            a, b = g.edge_endpoints(e)
            assert abs(marg[e] - g.weights[e] / u.effective_conductance(g, [a], [b])) < 1e-10


def test_negative_correlation():
    rng = np.random.default_rng(13)
    for _ in range(5):
        g = random_connected(6, 5, rng)
        law, marg = edge_marginals(g)
        for e, f in itertools.combinations(range(g.m), 2):
            joint = sum(p for t, p in law.items() if e in t and f in t)
            assert joint <= marg[e] * marg[f] + 1e-12


def test_spatial_markov_contraction():
    # conditioned on e in T, T minus e is a spanning tree of G/e
    g = u.make_complete(5)
    law = u.ust_distribution(g)
    e = 3
    a, b = g.edge_endpoints(e)
    cond = {tuple(x for x in t if x != e): p for t, p in law.items() if e in t}
    z = sum(cond.values())
    contracted = u.ust_distribution(u.contract(g, [a, b]))
    assert set(cond) == set(contracted)
    for t, p in cond.items():
        assert abs(p / z - contracted[t]) < 1e-12
