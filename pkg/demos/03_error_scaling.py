# %% [markdown]
# Error of the cluster MPO on a chain one site longer than the largest
# encoded cluster, as a function of the time step.

# %%
import math

import numpy as np

from clusterexp import models
from clusterexp.mpo import chain_errors, loglog_slope

h = models.xxz_term(0.5)
dts = np.geomspace(0.05, 0.4, 6)

for p in range(2, 7):
    errs = chain_errors(h, p, p + 1, dts)
    slope = loglog_slope(dts, errs)
    print(f"p={p}  slope {slope:.2f}  p!/p^p = {math.factorial(p) / p**p:.4f}")
    print("   ", " ".join(f"{e:.1e}" for e in errs))

# %% [markdown]
# Even p come out one order better than p, odd p land exactly on p.
