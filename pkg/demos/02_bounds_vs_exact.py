"""
Theoretical bounds against exact Gaussian values
================================================

The bound evaluators refuse to run outside their hypotheses. On the Gaussian
model every applicable bound can be compared with the exact left side.
"""

#%%
import numpy as np

from chaosmeter import bounds, gaussian
from chaosmeter.bounds import BoundParams
from chaosmeter.errors import HypothesisError

#%%
p = BoundParams(beta=1.0, M=1.0, gamma=0.25)
print("C =", bounds.main_constant(1.0, 0.25))
print("Fisher bound n=100, k=2:", bounds.thm_main_rhs(p, 100, 2))

#%%
# the bounds are far from tight, but decay at the same (k/n)^2 rate
a, b, k = 1.0, 0.25, 2
conv = BoundParams(beta=1.0, kappa=a, L=b)
for n in (20, 100, 400, 2000):
    exact = gaussian.marginal_divergences(a, b, n, k)
    fisher_rhs, kl_rhs, w2_rhs = bounds.cor_convex_rhs(conv, n, k)
    print(f"n={n:5d}  Fisher {exact.fisher:.2e} <= {fisher_rhs:.2e}   W2^2 {exact.w2sq:.2e} <= {w2_rhs:.2e}")

#%%
# reversed entropy: exponent min(2, 1/alpha) with alpha = (1+eps)(L/kappa)^2
rev = BoundParams(beta=1.0, kappa=a, L=b, epsilon=0.1)
print("alpha =", bounds.cor_convex_rev_alpha(rev))
for n in (20, 100, 400):
    print(n, gaussian.marginal_divergences(a, b, n, k).kl_reversed, bounds.cor_convex_rev_rhs(rev, n, k))

#%%
# outside the hypotheses the evaluators raise instead of returning a number
try:
    bounds.cor_convex_rhs(BoundParams(kappa=1.0, L=1.0), 100, 2)
except HypothesisError as exc:
    print("refused:", exc)

#%%
# full dominance report over a grid
reports = [r for n in (20, 50, 100, 200, 400) for k in range(2, 9)
           for r in bounds.gaussian_bound_reports(1.0, 0.5, n, k)]
print(len(reports), "reports,", sum(r.satisfied is False for r in reports), "violations")
print("smallest slack rhs/lhs:", min(r.rhs / r.lhs for r in reports if r.applicable and r.lhs > 0))
