# # The W-wired interlacement process
#
# Walks that start and end in a set W arrive as a Poisson process in time.
# Reading, for every vertex outside W, the first edge that enters it after a
# time t builds a forest with the law of the uniform spanning tree of G/W.

# In[1]:

import numpy as np

import ustlab as u

g = u.make_torus(2, 6)
W = [0, 21]

# A window of length 5 holds about 5 trajectories.

# In[2]:

s = u.sample_window(g, W, 0.0, 5.0, seed=1)
print(s)
for t, tr in s.events[:4]:
    print(f"t={t:.3f}  {tr.vertices.tolist()}")

# The forest at time t; the window grows until every vertex is covered.

# In[3]:

s = u.sample_covering(g, W, t=0.0, seed=2)
forest = u.ab_forest(s, t=0.0)
forest.validate(g)
print(s, "->", forest)
print("sizes of the two trees:", np.bincount(u.forest_roots(forest))[W])

# Shifting every timestamp by x and reading at t + x gives the same forest.

# In[4]:

shifted = u.time_shift(s, 3.0)
same = np.array_equal(u.ab_forest(shifted, t=3.0).parent_edge, forest.parent_edge)
print("identical after shift:", same)

# Which vertices are left by some trajectory during [0, 1]?

# In[5]:

print(u.interlacement_set(s, 0.0, 1.0))

# Tail of the height of the past of a vertex u when u is wired to W.

# In[6]:

tab = u.past_height_tail(g, W, 14, [1, 2, 4, 8], reps=2000, seed=3)
for ell, q, se in zip(tab.ell, tab.estimate, tab.stderr):
    print(f"l={ell:2d}  P(h >= l) = {q:.3f} +- {se:.3f}")
