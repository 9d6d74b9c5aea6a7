"""Right-hand sides of the local chaos bounds, and checks against exact values.

Every evaluator refuses to run outside the hypotheses under which its bound
holds, raising :class:`~chaosmeter.errors.HypothesisError` that names the
failed condition.

Notation: ``M`` second-moment constant of the centered interaction gradient,
``gamma`` transport constant, ``eta`` log-Sobolev constant, ``kappa`` and
``L`` the convexity constants of the confinement and interaction, ``c_mu``
a Poincare constant of the limit law.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import gaussian
from .errors import DomainError, HypothesisError

E = math.e


@dataclass(frozen=True)
class BoundParams:
    beta: float = 1.0
    M: float | None = None
    gamma: float | None = None
    eta: float | None = None
    epsilon: float | None = None
    kappa: float | None = None
    L: float | None = None
    d: int = 1
    c_mu: float | None = None

    def need(self, *names):
        missing = [nm for nm in names if getattr(self, nm) is None]
        if missing:
            raise HypothesisError(f"missing constants: {', '.join(missing)}")
        if not self.beta > 0:
            raise HypothesisError("beta must be positive")


def _check_nk(n, k, k_min):
    if int(n) != n or int(k) != k:
        raise DomainError("n and k must be integers")
    if not (n > k >= k_min):
        raise HypothesisError(f"requires n > k >= {k_min}, got n={n}, k={k}")


def _pow_small(base: float, expo: float) -> float:
    # base**expo in log space; base in [0, 1)
    if base == 0.0:
        return 0.0
    return math.exp(expo * math.log(base))


def main_constant(beta: float, gamma: float) -> float:
    """Constant C of the relative Fisher information bound (high temperature)."""
    g = beta * beta * gamma
    if not 0 < g < 1:
        raise HypothesisError(f"requires 0 < gamma*beta^2 < 1, got {g}")
    log_inv = math.log(1.0 / g)
    return 8 * math.pi / log_inv * ((1 + g) / (1 - math.sqrt(g)) ** 2 + 4 / (E * log_inv))


def thm_main_rhs(p: BoundParams, n: int, k: int) -> float:
    """Bound on ``I(P^n_k | mu^{(x)k})``:

    ``k M beta^2 (C sqrt(k-1)/(n-1) + (beta sqrt(gamma))^(n-k))^2``.
    """
    p.need("M", "gamma")
    _check_nk(n, k, 2)
    if p.M < 0:
        raise HypothesisError("M must be nonnegative")
    C = main_constant(p.beta, p.gamma)
    r = p.beta * math.sqrt(p.gamma)
    inner = C * math.sqrt(k - 1) / (n - 1) + _pow_small(r, n - k)
    return k * p.M * p.beta**2 * inner * inner


def cor_bounded_rhs(p: BoundParams, n: int, k: int) -> float:
    """Fisher bound for interactions with ``sup |grad V| = L`` and a Poincare
    constant ``c_mu < (beta L)^-2``: the main bound with ``gamma = c_mu L^2``, ``M = 2 L^2``."""
    p.need("L", "c_mu")
    if not p.c_mu * (p.beta * p.L) ** 2 < 1:
        raise HypothesisError(f"requires c_mu < (beta L)^-2, got c_mu={p.c_mu}, beta*L={p.beta * p.L}")
    q = BoundParams(beta=p.beta, M=2 * p.L**2, gamma=p.c_mu * p.L**2)
    return thm_main_rhs(q, n, k)


def convex_constant(kappa: float, L: float) -> float:
    r = L / kappa
    if not 0 < r < 1:
        raise HypothesisError(f"requires 0 < L < kappa, got L={L}, kappa={kappa}")
    lg = math.log(kappa / L)
    return 4 * math.pi / ((1 - r) ** 2 * lg) * ((1 + r * r) / (1 - r) ** 2 + 2 / (E * lg))


def cor_convex_rhs(p: BoundParams, n: int, k: int) -> tuple:
    """``(fisher_rhs, kl_rhs, w2_rhs)`` for uniformly convex models with ``L < kappa``.

    ``fisher_rhs = k (beta L^2 d / kappa) (C sqrt(k-1)/(n-1) + (L/kappa)^(n-k))^2``,
    then ``kl_rhs = fisher_rhs / (2 beta kappa)`` and
    ``w2_rhs = fisher_rhs / (beta kappa)^2`` through log-Sobolev and Talagrand.
    """
    p.need("kappa", "L")
    _check_nk(n, k, 2)
    if p.L == 0:
        return 0.0, 0.0, 0.0
    C = convex_constant(p.kappa, p.L)
    r = p.L / p.kappa
    inner = C * math.sqrt(k - 1) / (n - 1) + _pow_small(r, n - k)
    fisher = k * p.beta * p.L**2 * p.d / p.kappa * inner * inner
    bk = p.beta * p.kappa
    return fisher, fisher / (2 * bk), fisher / (bk * bk)


def _rev_exponents(alpha: float):
    return max(2.0, 1.0 / alpha), min(2.0, 1.0 / alpha)


def _check_alpha(alpha):
    if not alpha > 0:
        raise HypothesisError(f"requires alpha > 0, got {alpha}")
    if alpha == 0.5:
        raise HypothesisError("alpha = 1/2 is excluded; choose a smaller epsilon")


def reversed_rate(alpha: float, n: int, k: int) -> float:
    """``((1 + alpha k) / (1 + alpha (n-1)))^(min(2, 1/alpha))``."""
    _, expo = _rev_exponents(alpha)
    return ((1 + alpha * k) / (1 + alpha * (n - 1))) ** expo


def thm_main_rev_rhs(p: BoundParams, n: int, k: int) -> float:
    """Bound on the reversed entropy ``H(mu^{(x)k} | P^n_k)`` valid at any temperature."""
    p.need("M", "gamma", "eta", "epsilon")
    _check_nk(n, k, 1)
    if not (p.gamma > 0 and p.eta > 0 and p.epsilon > 0 and p.M >= 0):
        raise HypothesisError("requires gamma, eta, epsilon > 0 and M >= 0")
    alpha = p.eta * p.gamma * p.beta**2 * (1 + p.epsilon)
    _check_alpha(alpha)
    big, _ = _rev_exponents(alpha)
    b2 = p.beta**2
    pref = (1 + 2 * alpha) ** big / (p.epsilon * p.gamma * b2 * alpha * abs(1 - 2 * alpha)) + 2 * p.eta * p.M * b2
    return pref * reversed_rate(alpha, n, k)


def cor_convex_rev_alpha(p: BoundParams) -> float:
    p.need("kappa", "L", "epsilon")
    return (1 + p.epsilon) * (p.L / p.kappa) ** 2


def cor_convex_rev_constant(p: BoundParams) -> float:
    alpha = cor_convex_rev_alpha(p)
    _check_alpha(alpha)
    big, _ = _rev_exponents(alpha)
    return (1 + 1 / p.epsilon) * (1 + 2 * alpha) ** big / (
        2 * p.beta * p.kappa * alpha**2 * abs(1 - 2 * alpha)
    ) + alpha * p.d


def cor_convex_rev_rhs(p: BoundParams, n: int, k: int) -> float:
    """Reversed-entropy bound for convex models: ``C ((1+alpha k)/(1+alpha(n-1)))^(2 ^ 1/alpha)``
    with ``alpha = (1+epsilon)(L/kappa)^2``."""
    _check_nk(n, k, 1)
    if not p.epsilon or p.epsilon <= 0:
        raise HypothesisError("requires epsilon > 0")
    C = cor_convex_rev_constant(p)
    return C * reversed_rate(cor_convex_rev_alpha(p), n, k)


def subadditivity_bound(h_global: float, n: int, k: int) -> float:
    """Classical ``(2k/n) H(P^n | mu^{(x)n})`` bound on the k-marginal entropy."""
    if h_global < 0:
        raise DomainError("global entropy must be nonnegative")
    return 2.0 * k / n * h_global


def gaussian_gamma(a: float, b: float) -> float:
    """Transport constant ``b^2/(a+b)^2`` of the Gaussian model."""
    if not a > 0 or not b >= 0:
        raise DomainError("requires a > 0, b >= 0")
    return b * b / (a + b) ** 2


def hamming_pinsker_bounds(c_mu: float, k: int, fisher_val: float, kl_val: float) -> tuple:
    """``(k c_mu I, sqrt(2 KL))``: squared Hamming-W1 bound and Pinsker TV bound."""
    if min(c_mu, k, fisher_val, kl_val) < 0:
        raise DomainError("inputs must be nonnegative")
    return k * c_mu * fisher_val, math.sqrt(2.0 * kl_val)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("log-log slope needs positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# -- reports ---------------------------------------------------------------------


@dataclass
class BoundReport:
    name: str
    n: int
    k: int
    rhs: float
    lhs: float | None = None
    params: dict = field(default_factory=dict)
    applicable: bool = True

    @property
    def satisfied(self) -> bool | None:
        if self.lhs is None or not self.applicable:
            return None
        return bool(self.lhs <= self.rhs)

    def row(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "k": self.k,
            "rhs": repr(float(self.rhs)) if self.applicable else "",
            "lhs": "" if self.lhs is None else repr(float(self.lhs)),
            "satisfied": "" if self.satisfied is None else str(self.satisfied).lower(),
            "params": json.dumps(self.params, sort_keys=True),
        }


BOUND_FIELDS = ["name", "n", "k", "rhs", "lhs", "satisfied", "params"]


def write_bound_reports(reports, path, append: bool = False) -> None:
    new = not append or not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BOUND_FIELDS)
        if new:
            w.writeheader()
        for rep in reports:
            w.writerow(rep.row())


def gaussian_moment_M(a: float, b: float, n: int) -> float:
    """Exact ``M`` of the Gaussian model: ``E|b(x1 - x2) - b x1|^2 = b^2 Var(x2)``
    under the 2-marginal, since ``mu`` is centered."""
    spec = gaussian.GaussianCovSpec(a, b, n)
    return b * b * spec.d_n * (1 + spec.c_n)


def gaussian_bound_reports(a: float, b: float, n: int, k: int, epsilon: float = 0.1) -> list:
    """Evaluate every applicable bound for the Gaussian model (``beta = 1``, ``d = 1``)
    against the exact distances between ``P^n_k`` and ``mu^{(x)k}``."""
    exact = gaussian.marginal_divergences(a, b, n, k)
    reports = []

    def add(name, fn, lhs, params):
        try:
            rhs = fn()
            reports.append(BoundReport(name, n, k, rhs, lhs, params))
        except HypothesisError as exc:
            reports.append(BoundReport(name, n, k, math.nan, lhs, {**params, "reason": str(exc)}, False))

    gam = gaussian_gamma(a, b)
    M = gaussian_moment_M(a, b, n)
    main = BoundParams(beta=1.0, M=M, gamma=gam)
    add("thm_main_fisher", lambda: thm_main_rhs(main, n, k), exact.fisher, asdict(main))
    conv = BoundParams(beta=1.0, kappa=a, L=b, d=1)
    names = ("cor_convex_fisher", "cor_convex_kl", "cor_convex_w2sq")
    lhs = (exact.fisher, exact.kl, exact.w2sq)
    for i, (nm, val) in enumerate(zip(names, lhs)):
        add(nm, lambda i=i: cor_convex_rhs(conv, n, k)[i], val, asdict(conv))
    rev = BoundParams(beta=1.0, kappa=a, L=b, d=1, epsilon=epsilon)
    add("cor_convex_rev_kl", lambda: cor_convex_rev_rhs(rev, n, k), exact.kl_reversed, asdict(rev))
    h_global = gaussian.marginal_divergences(a, b, n, n).kl
    add("subadditivity_kl", lambda: subadditivity_bound(h_global, n, k), exact.kl, {"H_global": h_global})
    return reports
