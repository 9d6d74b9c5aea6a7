"""Exact analytics for the Gaussian mean-field model.

With ``beta = 1``, ``d = 1``, ``U(x) = a x^2/2`` and ``V(z) = b z^2/2`` the
n-particle law is the centered Gaussian with covariance

    Sigma_n = d_n (I_n + c_n J_n),   d_n = 1/(a + b n/(n-1)),   c_n = b/(a(n-1)),

its k-marginal has covariance ``d_n (I_k + c_n J_k)`` and the mean-field limit
is ``mu = N(0, 1/(a+b))``. Everything here is closed form or small dense
linear algebra on k x k matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg

from .errors import DomainError, PreconditionError

COMMUTE_TOL = 1e-10


@dataclass(frozen=True)
class GaussianCovSpec:
    """Parameters ``(a, b, n)`` of the Gaussian n-particle law."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        _check_ab(self.a, self.b)
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def d_n(self) -> float:
        return 1.0 / (self.a + self.b * self.n / (self.n - 1))

    @property
    def c_n(self) -> float:
        return self.b / (self.a * (self.n - 1))

    def covariance(self) -> np.ndarray:
        """Full n x n covariance ``Sigma_n``."""
        return self.d_n * (np.eye(self.n) + self.c_n * np.ones((self.n, self.n)))

    def precision(self) -> np.ndarray:
        """``Sigma_n^{-1} = (a + b n/(n-1)) I - b/(n-1) J``, read off the energy."""
        n = self.n
        return (self.a + self.b * n / (n - 1)) * np.eye(n) - self.b / (n - 1) * np.ones((n, n))


class CenteredGaussian:
    """Centered Gaussian on R^k given by its covariance matrix."""

    def __init__(self, cov):
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise DomainError(f"covariance must be square, got shape {cov.shape}")
        if np.max(np.abs(cov - cov.T)) > 1e-14 * max(1.0, np.max(np.abs(cov))):
            raise DomainError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        evals, evecs = np.linalg.eigh(cov)
        if evals[0] <= 0:
            raise DomainError("covariance is not positive definite")
        self.cov = cov
        self.eigenvalues = evals
        self._evecs = evecs

    @property
    def k(self) -> int:
        return self.cov.shape[0]

    @property
    def log_norm(self) -> float:
        """``log((2 pi)^{k/2} det(cov)^{1/2})``."""
        return 0.5 * (self.k * math.log(2 * math.pi) + float(np.sum(np.log(self.eigenvalues))))

    def sqrt_cov(self) -> np.ndarray:
        return (self._evecs * np.sqrt(self.eigenvalues)) @ self._evecs.T

    def precision(self) -> np.ndarray:
        return (self._evecs / self.eigenvalues) @ self._evecs.T

    def logpdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z = x @ self._evecs
        return -0.5 * np.sum(z * z / self.eigenvalues, axis=-1) - self.log_norm

    def score(self, x) -> np.ndarray:
        """Gradient of the log-density, ``-cov^{-1} x``."""
        return -np.asarray(x, dtype=float) @ self.precision()

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.standard_normal((size, self.k)) @ self.sqrt_cov()

    def __repr__(self):
        return f"CenteredGaussian(k={self.k})"


def _check_ab(a, b):
    if not (np.isfinite(a) and a > 0):
        raise DomainError(f"a must be positive, got {a}")
    if not (np.isfinite(b) and b >= 0):
        raise DomainError(f"b must be nonnegative, got {b}")


def _check_k(k, n):
    if int(k) != k or not 1 <= k <= n:
        raise DomainError(f"k must be an integer in [1, {n}], got {k}")
    return int(k)


def marginal_cov(spec: GaussianCovSpec, k: int) -> CenteredGaussian:
    """Law of the first k coordinates, covariance ``d_n (I_k + c_n J_k)``."""
    k = _check_k(k, spec.n)
    return CenteredGaussian(spec.d_n * (np.eye(k) + spec.c_n * np.ones((k, k))))


def limit_product(a: float, b: float, k: int) -> CenteredGaussian:
    """``mu^{(x)k}`` with ``mu = N(0, 1/(a+b))``."""
    _check_ab(a, b)
    return CenteredGaussian(np.eye(k) / (a + b))


def w2_commuting(g1: CenteredGaussian, g2: CenteredGaussian) -> float:
    """Squared W2 between centered Gaussians with commuting covariances.

    Uses ``Tr((S1^{1/2} - S2^{1/2})^2)`` with symmetric eigendecomposition square roots.
    """
    if g1.k != g2.k:
        raise PreconditionError(f"dimension mismatch: {g1.k} vs {g2.k}")
    s1, s2 = g1.cov, g2.cov
    if np.max(np.abs(s1 @ s2 - s2 @ s1)) > COMMUTE_TOL:
        raise PreconditionError("covariances do not commute")
    diff = g1.sqrt_cov() - g2.sqrt_cov()
    return float(np.sum(diff * diff))


def _sqrt1p_minus_1(t):
    # sqrt(1 + t) - 1 without cancellation
    return t / (math.sqrt(1.0 + t) + 1.0)


def _marginal_ratios(a, b, n, k):
    """Eigenvalue ratios (P^n_k eigenvalue)/(mu variance) minus one.

    Returns ``(t_bulk, t_top)`` for the (k-1)-fold eigenvalue ``d_n`` and the
    simple eigenvalue ``d_n (1 + k c_n)``; each computed without subtraction
    of nearly equal numbers.
    """
    s = a + b
    bn = b / (n - 1)
    kc = k * b / (a * (n - 1))
    t_bulk = -bn / (s + bn)
    t_top = (s * kc - bn) / (s + bn)
    return t_bulk, t_top


def w2_marginal_exact(a: float, b: float, n: int, k: int) -> float:
    """Closed-form ``W2^2(P^n_k, mu^{(x)k})`` for the Gaussian model."""
    _check_ab(a, b)
    if int(n) != n or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n}")
    k = _check_k(k, n)
    t_bulk, t_top = _marginal_ratios(a, b, n, k)
    return ((k - 1) * _sqrt1p_minus_1(t_bulk) ** 2 + _sqrt1p_minus_1(t_top) ** 2) / (a + b)


def w2_limit(a: float, b: float, kstar=math.inf) -> float:
    """Limit of ``(n/k)^2 W2^2(P^n_k, mu^{(x)k})`` as ``n -> inf``, ``k -> kstar``.

    ``kstar`` may be ``math.inf``. The bulk eigenvalue contributes
    ``(k-1)/k^2 * b^2 / (4 (a+b)^3)``; its ``k -> inf`` form ``1/k`` is only
    asymptotic, so the exact factor is kept for finite ``kstar``.
    """
    _check_ab(a, b)
    if not kstar >= 1:
        raise DomainError(f"kstar must be >= 1 or inf, got {kstar}")
    inv_k = 0.0 if math.isinf(kstar) else 1.0 / kstar
    s = a + b
    bulk = b * b * (inv_k - inv_k * inv_k) / (4 * s**3)
    return bulk + (b / (2 * a) - b * inv_k / (2 * s)) ** 2 / s


def _generalized_eigs(g1: CenteredGaussian, g2: CenteredGaussian) -> np.ndarray:
    # eigenvalues of Sigma_2^{-1} Sigma_1
    if g1.k != g2.k:
        raise DomainError(f"dimension mismatch: {g1.k} vs {g2.k}")
    return linalg.eigh(g1.cov, g2.cov, eigvals_only=True)


def _kl_from_ratios(lam) -> float:
    t = np.asarray(lam, dtype=float) - 1.0
    return max(0.0, 0.5 * float(np.sum(t - np.log1p(t))))


def kl_centered(g1: CenteredGaussian, g2: CenteredGaussian) -> float:
    """Relative entropy ``H(g1 | g2)``.

    Equal to ``(Tr(S2^{-1} S1) - k + log det S2 - log det S1) / 2``, evaluated
    through the generalized eigenvalues of ``(S1, S2)`` for accuracy when the
    two laws are close.
    """
    return _kl_from_ratios(_generalized_eigs(g1, g2))


def fisher_centered(g1: CenteredGaussian, g2: CenteredGaussian) -> float:
    """Relative Fisher information ``I(g1 | g2) = E_g1 |grad log(g1/g2)|^2``."""
    if g1.k != g2.k:
        raise DomainError(f"dimension mismatch: {g1.k} vs {g2.k}")
    delta = g2.precision() - g1.precision()
    return float(np.trace(delta @ g1.cov @ delta))


class MarginalDivergences(NamedTuple):
    w2sq: float
    kl: float
    fisher: float
    kl_reversed: float


def marginal_divergences(a: float, b: float, n: int, k: int) -> MarginalDivergences:
    """All distances between ``P^n_k`` and ``mu^{(x)k}`` from the two-eigenvalue structure.

    Both covariances share eigenvectors; with ``r`` the ratio of a marginal
    eigenvalue to ``1/(a+b)``:

    * KL(P|mu) sums ``(r - 1 - log r)/2``;
    * KL(mu|P) sums ``(1/r - 1 + log r)/2``;
    * Fisher(P|mu) sums ``(a+b) (1 - r)^2 / r``.
    """
    w2 = w2_marginal_exact(a, b, n, k)
    t_bulk, t_top = _marginal_ratios(a, b, n, k)
    t = np.array([t_bulk, t_top])
    mult = np.array([k - 1, 1.0])
    kl = 0.5 * float(np.sum(mult * (t - np.log1p(t))))
    u = -t / (1.0 + t)  # 1/r - 1
    kl_rev = 0.5 * float(np.sum(mult * (u - np.log1p(u))))
    fisher = (a + b) * float(np.sum(mult * t * t / (1.0 + t)))
    return MarginalDivergences(w2, kl, fisher, kl_rev)


class Lemma31Result(NamedTuple):
    lhs: np.ndarray
    rhs: np.ndarray
    max_abs_diff: float


def lemma31_check(a: float, b: float, n: int, k: int, x) -> Lemma31Result:
    """Compare both sides of the marginal score identity at ``x`` (length k).

    Left side: ``-grad log(dP^n_k / d mu^{(x)k})(x)`` from the explicit
    marginal and limit densities.

    Right side: the interaction representation

        1/(n-1) sum_{j<=k, j!=i} (V'(x_i - x_j) - <mu, V'(x_i - .)>)
            + (n-k)/(n-1) <P^n_{k+1|k}(x) - mu, V'(x_i - .)>

    where ``V'(z) = b z``, ``mu`` is centered and the conditional law of
    ``x_{k+1}`` is obtained by Gaussian conditioning of the inverted full
    precision matrix (independent of the ``d_n, c_n`` closed forms).
    """
    spec = GaussianCovSpec(a, b, n)
    k = int(k)
    if not 1 <= k < n:
        raise DomainError(f"need 1 <= k < n, got k={k}, n={n}")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != k:
        raise DomainError(f"x must have length k={k}, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("x has non-finite entries")

    # left: marginal score against the product limit
    pk = marginal_cov(spec, k)
    mu_k = limit_product(a, b, k)
    lhs = -(pk.score(x) - mu_k.score(x))

    # right: conditional mean of x_{k+1} given x_{1..k}
    full = np.linalg.inv(spec.precision())
    block = full[: k + 1, : k + 1]
    cross = block[k, :k]
    cond_mean = float(cross @ np.linalg.solve(block[:k, :k], x))
    mu_mean = 0.0
    inner = b * x[:, None] - b * x[None, :]  # V'(x_i - x_j)
    mu_term = b * (x - mu_mean)  # <mu, V'(x_i - .)>
    pair = (inner - mu_term[:, None]).copy()
    np.fill_diagonal(pair, 0.0)
    rhs = pair.sum(axis=1) / (n - 1)
    # <P_{k+1|k} - mu, V'(x_i - .)> = -b (cond_mean - mu_mean)
    rhs = rhs + (n - k) / (n - 1) * (-b * (cond_mean - mu_mean))

    lhs = lhs.reshape(k, 1)
    rhs = rhs.reshape(k, 1)
    return Lemma31Result(lhs, rhs, float(np.max(np.abs(lhs - rhs))))


class LogConcavity(NamedTuple):
    joint: float
    marginal: float
    conditional: float


def log_concavity_constants(a: float, b: float, n: int, k: int) -> LogConcavity:
    """Smallest precision eigenvalue of the joint law, its k-marginal, and
    the conditional law of the last ``n-k`` coordinates given the first k.

    Uniform convexity of ``-log P^n`` with constant ``a`` is preserved under
    marginalization and conditioning, so all three are ``>= a``.
    """
    spec = GaussianCovSpec(a, b, n)
    k = _check_k(k, n)
    prec = spec.precision()
    joint = float(np.linalg.eigvalsh(prec)[0])
    marg = float(np.linalg.eigvalsh(np.linalg.inv(spec.covariance()[:k, :k]))[0])
    if k < n:
        # conditional precision is the lower-right block of the joint precision
        cond = float(np.linalg.eigvalsh(prec[k:, k:])[0])
    else:
        cond = math.inf
    return LogConcavity(joint, marg, cond)
