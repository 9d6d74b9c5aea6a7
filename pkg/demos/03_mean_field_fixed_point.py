"""
The mean-field limit law
========================

The one-particle limit solves a self-consistency equation. The damped
fixed-point solver works on a 1-D grid for any built-in potential.
"""

#%%
import numpy as np

from chaosmeter import meanfield as mf
from chaosmeter.model import ModelSpec

#%%
# quadratic model: the limit is N(0, 1/(a+b))
spec = ModelSpec(a=1.0, b=1.0)
res = mf.solve_fixed_point(spec)
lo, hi, m = mf.default_grid(spec)
print(res.iterations, "iterations, residual", res.residual)
print("L1 to N(0,1/2):", res.density.l1(mf.gaussian_on_grid(0.5, lo, hi, m)))

#%%
# the rate functional is minimized at the fixed point
for var in (0.25, 0.4, 0.5, 0.6, 1.0):
    print(var, mf.rate_functional(spec, mf.gaussian_on_grid(var, lo, hi, m)))

#%%
# same answer from very different starting points
starts = ["uniform", lambda x: np.exp(-((x - 3) ** 2)), lambda x: np.exp(-((x - 2) ** 2)) + np.exp(-((x + 2) ** 2))]
for s in starts:
    print(mf.solve_fixed_point(spec, init=s).density.l1(res.density))

#%%
# a non-Gaussian model: quartic confinement with a saturating interaction
quartic = ModelSpec(a=1.0, confinement="quartic", q=1.0, interaction="tabulated",
                    table_r=(0.0, 1.0, 3.0), table_dv=(0.0, 0.5, 0.8))
mu = mf.solve_fixed_point(quartic, (-5.0, 5.0, 1024))
print("converged:", mu.converged, "variance:", mu.density.moment(2))
print("certificate:", mf.fixed_point_residual(quartic, mu.density))
