"""
Estimating W2 from samples
==========================

For general models the marginal distance has to be estimated. Empirical W2
is biased upward by the sampling error of both empirical measures; the
estimator subtracts a same-law estimate of that bias.
"""

#%%
from chaosmeter import gaussian, metrics, sampler
from chaosmeter.model import ModelSpec

a = b = 1.0
n, k, N, R = 64, 2, 1024, 20

#%%
ens = sampler.sample_gibbs(ModelSpec(a=a, b=b), n,
                           sampler.SamplerConfig(n_samples=N * R, seed=8, step=0.2, chains=64, workers=4))
rep = metrics.subsampled_w2(ens, metrics.gaussian_product_sampler(1 / (a + b)), k, N, R, seed=8, workers=4)
print(rep.method)
print("raw mean  ", rep.details["raw_mean"])
print("bias proxy", rep.details["bias_proxy"])
print("corrected ", rep.details["corrected_mean"], "+/-", rep.std_error)
print("exact     ", gaussian.w2_marginal_exact(a, b, n, k))

#%%
# the bias shrinks with N, slowly: it dominates the signal at this n
mu = metrics.gaussian_product_sampler(0.5)
for N in (128, 256, 512, 1024):
    print(N, metrics.subsampled_w2(ens, mu, k, N, 4, seed=1).details["bias_proxy"])

#%%
# for small n the distance is large enough to see clearly
for n_small in (2, 4, 8):
    e = sampler.sample_gibbs(ModelSpec(a=a, b=b), n_small,
                             sampler.SamplerConfig(n_samples=8192, seed=2, step=0.3, chains=32))
    r = metrics.subsampled_w2(e, mu, 2, 1024, 8, seed=2)
    print(n_small, r.details["corrected_mean"], "+/-", r.std_error, "exact", gaussian.w2_marginal_exact(a, b, n_small, 2))
