# %% [markdown]
# The square-lattice operator: trees live on level 1, the 2x2 loop needs
# level 2.

# %%
import numpy as np

from clusterexp import models
from clusterexp.mpo import NoiseFloorError, loglog_slope
from clusterexp.oracle import operator_distance
from clusterexp.pepo import PatchSpec, build_pepo, contract_patch, exact_sites_exponential, patch_errors

h = models.heisenberg_rotated_term()
t = -0.3j

for plaquette in (False, True):
    pepo, report = build_pepo(h, t, include_plaquette=plaquette)
    print(report.lines()[0])
    for shape in [(1, 2), (1, 3), (2, 2), (2, 3)]:
        ps = PatchSpec(*shape)
        err = operator_distance(contract_patch(pepo, ps), exact_sites_exponential(h, ps.sites(), t))
        print(f"  {ps.rows}x{ps.cols}: {err:.2e}")

# %% [markdown]
# Order of the remaining error in dt.

# %%
dts = np.geomspace(0.05, 0.4, 6)
for shape, plaquette in [((2, 2), False), ((2, 2), True), ((2, 3), True)]:
    ps = PatchSpec(*shape)
    errs = patch_errors(h, ps, dts, include_plaquette=plaquette)
    try:
        slope = f"{loglog_slope(dts, errs):.2f}"
    except NoiseFloorError:
        slope = "exact (noise floor)"
    print(f"{ps.rows}x{ps.cols} plaquette={plaquette}: slope {slope}")
