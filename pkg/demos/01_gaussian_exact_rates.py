"""
Exact marginal distances in the Gaussian model
==============================================

With quadratic confinement and interaction everything is Gaussian, so the
distance between the k-particle marginal and the product of the limit law
is available in closed form. This script tabulates it and fits the rate.
"""

#%%
from pathlib import Path

import numpy as np

from chaosmeter import bounds, gaussian
from chaosmeter.svgplot import loglog_svg

OUT = Path(__file__).with_name("output")
OUT.mkdir(exist_ok=True)
a, b = 1.0, 1.0

#%%
# W2^2, KL, Fisher and reversed KL for a few (n, k)
for n in (10, 100, 1000):
    for k in (1, 2, 5):
        d = gaussian.marginal_divergences(a, b, n, k)
        print(f"n={n:5d} k={k}  W2^2={d.w2sq:.3e}  KL={d.kl:.3e}  Fisher={d.fisher:.3e}  revKL={d.kl_reversed:.3e}")

#%%
# rate in n at fixed k: slope 2 on log-log axes, i.e. (k/n)^2
ns = np.array([50, 100, 200, 400, 800, 1600, 3200, 6400])
series = {}
for k in (2, 4, 8):
    w2 = np.array([gaussian.w2_marginal_exact(a, b, int(n), k) for n in ns])
    print(f"k={k}: slope {bounds.loglog_slope(k / ns, w2):.4f}")
    series[f"k={k}"] = (k / ns, w2)
(OUT / "gaussian_rates.svg").write_text(loglog_svg(series, title="Exact W2^2 vs k/n", xlabel="k/n", ylabel="W2^2"))

#%%
# the normalized distance approaches its limit; k = sqrt(n) tends to the k* = inf value 1/8
for n in (10**2, 10**4, 10**6):
    k = int(np.sqrt(n))
    print(n, (n / k) ** 2 * gaussian.w2_marginal_exact(a, b, n, k), gaussian.w2_limit(a, b))
for kstar in (1, 2, 10):
    n = 10**7
    print("k* =", kstar, (n / kstar) ** 2 * gaussian.w2_marginal_exact(a, b, n, kstar), gaussian.w2_limit(a, b, kstar))

#%%
# compared with the classical entropy subadditivity bound 2k/n H(P^n | mu^n)
for n in (50, 200, 800, 3200):
    h = gaussian.marginal_divergences(a, b, n, n).kl
    kl2 = gaussian.marginal_divergences(a, b, n, 2).kl
    print(f"n={n:5d}  KL_2={kl2:.3e}  baseline={bounds.subadditivity_bound(h, n, 2):.3e}")
