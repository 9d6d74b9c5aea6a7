"""Sampling the n-particle Gibbs measure with (Metropolis-adjusted) Langevin.

Each step moves every particle by ``h * drift + sqrt(2h) * xi``; with MALA the
move is accepted with the Metropolis-Hastings probability for the target
``exp(-energy)``, which makes the n-particle Gibbs law exactly invariant.

Chains are independent. Chain ``c`` draws from its own Philox stream keyed by
``(seed, c)`` and consumes it in fixed blocks of steps, so the output does not
depend on how chains are grouped over workers.
"""

from __future__ import annotations

import csv
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import model
from .errors import DivergenceError, DomainError

NOISE_BLOCK = 256
THIN_TARGET = 0.2
ACCEPT_RANGE = (0.3, 0.9)


@dataclass(frozen=True)
class SamplerConfig:
    """Chain settings. ``None`` fields are filled from the model by :meth:`resolve`.

    Defaults: ``step = 0.1 / (beta (kappa + 2L))``, ``burn_in = 10 / (step beta kappa)``
    and ``thin`` the smallest lag at which the autocorrelation of
    ``sum_i |x_i|^2`` drops below 0.2 in a pilot run.
    """

    n_samples: int = 1000
    seed: int = 0
    step: float | None = None
    burn_in: int | None = None
    thin: int | None = None
    mala: bool = True
    chains: int = 1
    workers: int = 1

    def resolve(self, spec: model.ModelSpec, n: int) -> "SamplerConfig":
        stiff = spec.beta * (spec.kappa + 2 * spec.lipschitz_L)
        step = self.step if self.step is not None else 0.1 / stiff
        if not step > 0:
            raise DomainError(f"step must be positive, got {step}")
        if step * stiff >= 2:
            raise DomainError(f"step {step} too large: need h*beta*(kappa+2L) < 2")
        burn = self.burn_in
        if burn is None:
            burn = math.ceil(10.0 / (step * spec.beta * spec.kappa))
        if self.n_samples < 1 or self.chains < 1 or self.workers < 1 or burn < 0:
            raise DomainError("n_samples, chains and workers must be >= 1, burn_in >= 0")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must fit in an unsigned 64-bit integer")
        cfg = replace(self, step=float(step), burn_in=int(burn))
        thin = self.thin if self.thin is not None else pilot_thin(spec, n, cfg)
        if thin < 1:
            raise DomainError("thin must be >= 1")
        return replace(cfg, thin=int(thin))


@dataclass
class ParticleEnsemble:
    """``samples[s, i, :]`` is particle ``i`` of draw ``s``; draws are chain-major."""

    samples: np.ndarray
    spec: model.ModelSpec | None
    config: SamplerConfig
    acceptance_rate: float | None = None
    chain_index: np.ndarray | None = None
    warnings: list = field(default_factory=list)

    @property
    def S(self) -> int:
        return self.samples.shape[0]

    @property
    def n(self) -> int:
        return self.samples.shape[1]

    @property
    def d(self) -> int:
        return self.samples.shape[2]


def _chain_rng(seed: int, chain: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chain,))))


class _Noise:
    """Per-chain block-buffered normals and uniforms, stacked across a group of chains."""

    def __init__(self, rngs, n, d, total_steps):
        self.rngs = rngs
        self.shape = (n, d)
        self.remaining = total_steps
        self.pos = 0
        self.normals = self.uniforms = None

    def next(self):
        if self.normals is None or self.pos >= self.normals.shape[1]:
            self._refill()
        xi = self.normals[:, self.pos]
        u = self.uniforms[:, self.pos]
        self.pos += 1
        return xi, u

    def _refill(self):
        b = min(NOISE_BLOCK, self.remaining)
        if b <= 0:
            raise RuntimeError("noise stream exhausted")
        self.remaining -= b
        self.normals = np.stack([g.standard_normal((b,) + self.shape) for g in self.rngs])
        self.uniforms = np.stack([g.random(b) for g in self.rngs])
        self.pos = 0


def _run_chains(spec, n, cfg, chain_ids, n_keep, record=None):
    """Advance a group of chains; return kept states ``(C, n_keep, n, d)`` and acceptance count.

    ``record`` (optional) receives ``sum |x|^2`` for every post-burn-in step,
    used by the thinning pilot.
    """
    rngs = [_chain_rng(cfg.seed, c) for c in chain_ids]
    d = spec.dimension
    x = np.stack([g.standard_normal((n, d)) for g in rngs]) / math.sqrt(spec.beta * spec.kappa)
    total = cfg.burn_in + n_keep * cfg.thin
    noise = _Noise(rngs, n, d, total)
    h = cfg.step
    sq = math.sqrt(2 * h)
    kept = np.empty((len(chain_ids), n_keep, n, d))
    accepted = 0
    g = model._drift(spec, x)
    e = model._energy(spec, x)
    trace = [] if record is not None else None
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(total):
            xi, u = noise.next()
            prop = x + h * g + sq * xi
            if cfg.mala:
                gp = model._drift(spec, prop)
                ep = model._energy(spec, prop)
                back = x - prop - h * gp
                log_ratio = (e - ep) - np.sum(back * back, axis=(-2, -1)) / (4 * h) + 0.5 * np.sum(xi * xi, axis=(-2, -1))
                acc = np.log(u) < log_ratio
                x = np.where(acc[:, None, None], prop, x)
                g = np.where(acc[:, None, None], gp, g)
                e = np.where(acc, ep, e)
                if t >= cfg.burn_in:
                    accepted += int(np.count_nonzero(acc))
            else:
                x = prop
                g = model._drift(spec, x)
                if not np.all(np.isfinite(x)):
                    raise DivergenceError(f"non-finite state at iteration {t}", iteration=t)
            if trace is not None and t >= cfg.burn_in:
                trace.append(np.sum(x * x, axis=(-2, -1)))
            s = t - cfg.burn_in + 1
            if s > 0 and s % cfg.thin == 0:
                kept[:, s // cfg.thin - 1] = x
    if not np.all(np.isfinite(kept)):
        raise DivergenceError("non-finite state in kept samples", iteration=total)
    if record is not None:
        record.extend(trace)
    return kept, accepted


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Autocorrelation of ``series`` (shape ``(T,)`` or ``(T, C)``, averaged over columns)."""
    s = np.asarray(series, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    s = s - s.mean(axis=0)
    var = np.mean(s * s)
    if var == 0:
        return np.zeros(max_lag + 1)
    T = s.shape[0]
    return np.array([np.mean(s[: T - lag] * s[lag:]) / var for lag in range(max_lag + 1)])


def pilot_thin(spec: model.ModelSpec, n: int, cfg: SamplerConfig, steps: int = 4000, max_thin: int = 1000) -> int:
    """Smallest lag with autocorrelation of ``sum_i |x_i|^2`` below 0.2.

    Runs 8 pilot chains on a stream disjoint from the sampling chains.
    """
    pilot = replace(cfg, thin=steps, seed=cfg.seed)
    trace = []
    ids = [2**31 + c for c in range(8)]
    _run_chains(spec, n, pilot, ids, 1, record=trace)
    acf = autocorrelation(np.array(trace), min(max_thin, steps // 4))
    below = np.nonzero(acf < THIN_TARGET)[0]
    return int(below[0]) if below.size else max_thin


def sample_gibbs(spec: model.ModelSpec, n: int, config: SamplerConfig | None = None) -> ParticleEnsemble:
    """Draw ``config.n_samples`` configurations of the n-particle Gibbs law.

    Deterministic given ``config.seed``; identical for any ``config.workers``.
    """
    if int(n) != n or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n}")
    n = int(n)
    cfg = (config or SamplerConfig()).resolve(spec, n)
    per_chain = math.ceil(cfg.n_samples / cfg.chains)
    groups = np.array_split(np.arange(cfg.chains), min(cfg.workers, cfg.chains))

    def work(ids):
        return _run_chains(spec, n, cfg, list(ids), per_chain)

    if len(groups) == 1:
        results = [work(groups[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(groups)) as pool:
            results = list(pool.map(work, groups))
    kept = np.concatenate([r[0] for r in results], axis=0)
    samples = kept.reshape(-1, n, spec.dimension)[: cfg.n_samples]
    chain_index = np.repeat(np.arange(cfg.chains), per_chain)[: cfg.n_samples]

    ens = ParticleEnsemble(np.ascontiguousarray(samples), spec, cfg, chain_index=chain_index)
    if cfg.mala:
        moves = cfg.chains * per_chain * cfg.thin
        ens.acceptance_rate = sum(r[1] for r in results) / moves
        lo, hi = ACCEPT_RANGE
        if not lo <= ens.acceptance_rate <= hi:
            ens.warnings.append(f"MALA acceptance rate {ens.acceptance_rate:.3f} outside [{lo}, {hi}]")
    return ens


def marginal_slice(ens: ParticleEnsemble, k: int, subset=None) -> np.ndarray:
    """Samples of k particles, shape ``(S, k, d)``.

    By default the first k particles; ``subset`` picks any k distinct indices,
    which has the same law by exchangeability.
    """
    if int(k) != k or not 1 <= k <= ens.n:
        raise DomainError(f"k must lie in [1, {ens.n}], got {k}")
    if subset is None:
        return ens.samples[:, :k]
    idx = np.asarray(subset, dtype=int)
    if idx.shape != (k,) or len(set(idx.tolist())) != k or idx.min() < 0 or idx.max() >= ens.n:
        raise DomainError("subset must hold k distinct particle indices")
    return ens.samples[:, idx]


# -- summaries ----------------------------------------------------------------


class CovarianceEstimate(NamedTuple):
    cov: np.ndarray
    std_error: np.ndarray


def _batches(ens: ParticleEnsemble, n_batches: int = 20):
    if ens.chain_index is not None and np.unique(ens.chain_index).size >= 10:
        return [ens.chain_index == c for c in np.unique(ens.chain_index)]
    return [np.isin(np.arange(ens.S), b) for b in np.array_split(np.arange(ens.S), n_batches)]


def empirical_covariance(ens: ParticleEnsemble) -> CovarianceEstimate:
    """Covariance of the flattened particle coordinates with batch-means standard errors.

    Batches are chains when there are at least 10 of them, otherwise 20
    contiguous blocks. The model is centered, so second moments about zero
    are used.
    """
    flat = ens.samples.reshape(ens.S, -1)
    cov = flat.T @ flat / ens.S
    per = np.stack([flat[m].T @ flat[m] / m.sum() for m in _batches(ens)])
    se = per.std(axis=0, ddof=1) / math.sqrt(per.shape[0])
    return CovarianceEstimate(cov, se)


class ExchangeableMoments(NamedTuple):
    diag: float
    diag_se: float
    offdiag: float
    offdiag_se: float


def exchangeable_moments(ens: ParticleEnsemble) -> ExchangeableMoments:
    """Pooled variance and pooled cross-covariance of the first coordinate.

    Under exchangeability every diagonal entry of the covariance equals the
    same value, and every off-diagonal entry another; these pool them.
    """
    x = ens.samples[..., 0]
    n = ens.n
    sq = np.sum(x * x, axis=1)
    cross = (np.sum(x, axis=1) ** 2 - sq) / (n * (n - 1))
    diag = sq / n
    out = []
    for stat in (diag, cross):
        per = np.array([stat[m].mean() for m in _batches(ens)])
        out += [float(stat.mean()), float(per.std(ddof=1) / math.sqrt(per.size))]
    return ExchangeableMoments(*out)


# -- persistence ----------------------------------------------------------------

MAGIC = b"CHME"
VERSION = 1
_HEADER = struct.Struct("<4s5Q")


def save_ensemble(ens: ParticleEnsemble, path) -> None:
    """Binary layout: ``CHME`` then version, S, n, d, seed as little-endian
    uint64, then ``S*n*d`` little-endian doubles in row-major order."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, ens.S, ens.n, ens.d, ens.config.seed))
        fh.write(np.ascontiguousarray(ens.samples, dtype="<f8").tobytes())


def load_ensemble(path, spec: model.ModelSpec | None = None) -> ParticleEnsemble:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise DomainError("file too short for an ensemble header")
        magic, version, S, n, d, seed = _HEADER.unpack(head)
        if magic != MAGIC:
            raise DomainError(f"bad magic {magic!r}")
        if version != VERSION:
            raise DomainError(f"unsupported ensemble version {version}")
        body = fh.read()
    if len(body) != 8 * S * n * d:
        raise DomainError(f"expected {8 * S * n * d} payload bytes, found {len(body)}")
    samples = np.frombuffer(body, dtype="<f8").astype(float).reshape(S, n, d)
    return ParticleEnsemble(samples, spec, SamplerConfig(n_samples=S, seed=seed))


def write_marginal_csv(ens: ParticleEnsemble, k: int, path) -> None:
    """One row per draw: ``sample`` then the coordinates of particles 1..k."""
    sl = marginal_slice(ens, k)
    if ens.d == 1:
        cols = [f"x{i + 1}" for i in range(k)]
    else:
        cols = [f"x{i + 1}_{j + 1}" for i in range(k) for j in range(ens.d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample"] + cols)
        for s, row in enumerate(sl.reshape(ens.S, -1)):
            w.writerow([s] + [repr(float(v)) for v in row])
