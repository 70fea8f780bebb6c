# # Diameter of uniform spanning trees grows like sqrt(n)
#
# On balanced, fast-mixing, high-dimensional graphs the diameter divided by
# sqrt(n) stays in a fixed window as n grows. The path graph is the control:
# its only spanning tree has diameter n - 1.

# In[1]:

import numpy as np

from ustlab import ExperimentSpec, run_experiment

# In[2]:

for family, sizes in (("hypercube", [8, 10, 12]),
                      ("random-regular", [256, 1024, 4096]),
                      ("path", [64, 256, 1024])):
    spec = ExperimentSpec(experiment="diameter", family=family, sizes=sizes,
                          replicas=50, seed=0)
    res = run_experiment(spec)
    print(f"{family:15s} median diam/sqrt(n): {np.round(res.values('median_ratio'), 2)}")
    for c in res.checks:
        print(f"   {'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")

# The same experiment from the command line writes CSV:
#
#     echo '{"family": "hypercube", "sizes": [10, 11], "replicas": 50}' > spec.json
#     ustlab diameter --config spec.json --out diam.csv
