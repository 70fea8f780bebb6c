# # Graphs, lazy walks and mixing
#
# Build a few of the standard families, look at their degree balance, and
# measure how fast the lazy random walk forgets its starting point.

# In[1]:

import numpy as np

import ustlab as u

# A 5-dimensional torus of side 3, a hypercube, and a random 3-regular graph.

# In[2]:

graphs = {
    "torus Z_3^5": u.make_torus(5, 3),
    "hypercube 2^8": u.make_hypercube(8),
    "3-regular n=256": u.make_random_regular(256, 3, seed=1),
    "path n=64": u.make_path(64),
}
for name, g in graphs.items():
    print(f"{name:18s} n={g.n:4d}  m={g.m:5d}  balance D={g.balance:g}")

# The uniform mixing time is the first t with max |p^t(u,v)/pi(v) - 1| <= 1/2.
# Expanders mix in O(log n) steps; the path needs order n^2.

# In[3]:

for name, g in graphs.items():
    b = u.bubble_sum(g)
    print(f"{name:18s} t_mix={b.t_mix:6d}  bubble sum B(G)={b.value:10.4g}")

# A lazy walk stays put with probability 1/2, so after one step from vertex 0
# of K_3 each neighbour has probability 1/4.

# In[4]:

k3 = u.make_complete(3)
print(u.transition_row(k3, 0, 1))
print(u.transition_row(k3, 0, 2))

# Capacity: the chance that a walk from stationarity hits a set within r steps.
# It never exceeds the union bound r * pi(U).

# In[5]:

g = graphs["hypercube 2^8"]
U = [0, 1, 2, 3]
for r in (1, 4, 16, 64):
    print(f"r={r:3d}  Cap_r(U)={u.capacity(g, U, r):.5f}  r*pi(U)={r * g.stationary[U].sum():.5f}")

# Hitting times and the target time: the average time to hit a stationary
# target does not depend on the start.

# In[6]:

tt = u.target_time(u.make_hypercube(6))
print("target time from each start (first five):", np.round(tt[:5], 8))
