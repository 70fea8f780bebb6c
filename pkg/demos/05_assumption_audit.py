# # Checking the assumptions on a graph
#
# The diameter law needs three things: bounded degree ratio, fast mixing
# (t_mix <= n^(1/2 - alpha)) and a bounded bubble sum. The audit reports each.

# In[1]:

import ustlab as u
from ustlab import run_assumption_audit

# In[2]:

for name, g in (("complete n=400", u.make_complete(400)),
                ("hypercube 2^8", u.make_hypercube(8)),
                ("star n=64", u.make_star(64)),
                ("path n=256", u.make_path(256))):
    print(name)
    for line in run_assumption_audit(g, alpha=0.1).lines():
        print("   ", line)

# Beyond 4096 vertices the mixing time and bubble sum are computed from the
# exact laws of walks started at a few probe vertices and marked ESTIMATED.

# In[3]:

for line in run_assumption_audit(u.make_hypercube(13)).lines():
    print(line)
