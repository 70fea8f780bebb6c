# # Uniform spanning trees
#
# Wilson's algorithm and Aldous-Broder sample the same law. On small graphs
# the matrix-tree theorem and brute-force enumeration give the exact answer.

# In[1]:

from collections import Counter

import numpy as np
from scipy import stats

import ustlab as u

# K_4 has 4^(4-2) = 16 spanning trees.

# In[2]:

k4 = u.make_complete(4)
print("spanning trees of K4:", u.spanning_tree_count(k4))
law = u.ust_distribution(k4)
print("distinct trees:", len(law))

# Draw 100000 trees with each sampler in one compiled call and compare the
# frequencies with the uniform law.

# In[3]:

support = sorted(law)
expected = np.array([law[t] for t in support]) * 100_000
for name, (_, pedges) in {
        "wilson": u.wilson_batch(k4, [0], 100_000, seed=1),
        "aldous-broder": u.aldous_broder_batch(k4, 0, 100_000, seed=2)}.items():
    obs = u.frequency_table(u.tree_keys(pedges), support)
    print(f"{name:14s} chi-square p = {stats.chisquare(obs, expected).pvalue:.3f}")

# Loop erasure: erase cycles in the order they close.

# In[4]:

walk = [0, 1, 2, 1, 3, 0, 4]
le = u.loop_erase(walk)
print("walk", walk, "-> loop erasure", le.path.tolist(), "times", le.lambda_times.tolist())
print("cut points", u.cut_points(walk).tolist())

# The path between two vertices of a uniform spanning tree is a loop-erased
# walk. On the 5-cycle the short way round from 0 to 2 has probability 3/5.

# In[5]:

c5 = u.make_cycle(5)
rng = np.random.default_rng(3)
paths = Counter(tuple(u.ust_path(c5, 0, 2, seed=rng).tolist()) for _ in range(20_000))
for p, c in paths.most_common():
    print(p, c / 20_000)

# Trees of a large graph: a 2^12 hypercube, rooted at 0.

# In[6]:

g = u.make_hypercube(12)
tree = u.wilson(g, [0], seed=4)
print("diameter", u.diameter(tree), " sqrt(n) =", g.n ** 0.5, " height", u.height(tree))
