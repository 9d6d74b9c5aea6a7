"""Mean-field Gibbs model family.

The n-particle measure has density proportional to ``exp(-energy(x))`` with

    energy(x) = beta * [ sum_i U(x_i) + 1/(n-1) * sum_{i<j} V(x_i - x_j) ]

where ``U`` is a uniformly convex confinement and ``V`` an even, convex
interaction. Only built-in potential kinds are supported so that the
convexity constants ``kappa`` (lower Hessian bound of U) and ``lipschitz_L``
(upper Hessian bound of V) are exact.

Configurations are plain arrays of shape ``(n, d)``; every function also
accepts a leading batch shape ``(..., n, d)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError

CONFINEMENT_KINDS = ("quadratic", "quartic")
INTERACTION_KINDS = ("quadratic", "tabulated")


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of the Gibbs model.

    Attributes:
        beta: inverse temperature.
        a: quadratic coefficient of the confinement, ``U(x) = a|x|^2/2 + q|x|^4/4``.
        b: coefficient of the quadratic interaction ``V(z) = b|z|^2/2``.
        q: quartic coefficient of the confinement (``confinement="quartic"``).
        confinement: ``"quadratic"`` or ``"quartic"``.
        interaction: ``"quadratic"`` or ``"tabulated"``.
        dimension: particle dimension d.
        table_r: radii ``0 = r_0 < r_1 < ...`` of a tabulated radial interaction.
        table_dv: values of ``v'(r)`` at ``table_r``; ``V(z) = v(|z|)``, with
            ``v'`` linearly interpolated and held constant past the last radius.
    """

    beta: float = 1.0
    a: float = 1.0
    b: float = 0.0
    q: float = 0.0
    confinement: str = "quadratic"
    interaction: str = "quadratic"
    dimension: int = 1
    table_r: tuple = field(default=())
    table_dv: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "table_r", tuple(float(t) for t in self.table_r))
        object.__setattr__(self, "table_dv", tuple(float(t) for t in self.table_dv))
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise DomainError(f"beta must be positive, got {self.beta}")
        if self.confinement not in CONFINEMENT_KINDS:
            raise DomainError(f"unknown confinement kind {self.confinement!r}")
        if self.interaction not in INTERACTION_KINDS:
            raise DomainError(f"unknown interaction kind {self.interaction!r}")
        if not (np.isfinite(self.a) and self.a > 0):
            raise DomainError(f"confinement needs a > 0, got {self.a}")
        if self.confinement == "quartic":
            if not (np.isfinite(self.q) and self.q >= 0):
                raise DomainError(f"quartic confinement needs q >= 0, got {self.q}")
        elif self.q != 0:
            raise DomainError("q is only meaningful for the quartic confinement")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.dimension}")
        object.__setattr__(self, "dimension", int(self.dimension))
        if self.interaction == "quadratic":
            if not (np.isfinite(self.b) and self.b >= 0):
                raise DomainError(f"quadratic interaction needs b >= 0, got {self.b}")
            if self.table_r or self.table_dv:
                raise DomainError("table_r/table_dv require interaction='tabulated'")
        else:
            self._check_table()

    def _check_table(self):
        r = np.asarray(self.table_r)
        g = np.asarray(self.table_dv)
        if r.size < 2 or r.shape != g.shape:
            raise DomainError("tabulated interaction needs matching table_r/table_dv of length >= 2")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(g))):
            raise DomainError("tabulated interaction must be finite")
        if r[0] != 0.0 or g[0] != 0.0:
            raise DomainError("tabulated interaction must start at r=0 with v'(0)=0")
        if np.any(np.diff(r) <= 0):
            raise DomainError("table_r must be strictly increasing")
        if np.any(np.diff(g) < 0):
            # v' nondecreasing and v'(0)=0 gives 0 <= Hess V, as required for convexity
            raise DomainError("table_dv must be nondecreasing (convex interaction)")

    # -- convexity constants -------------------------------------------------

    @property
    def kappa(self) -> float:
        """Lower Hessian bound of U. The quartic term is convex, so it is ``a``."""
        return float(self.a)

    @property
    def lipschitz_L(self) -> float:
        """Upper Hessian bound of V."""
        if self.interaction == "quadratic":
            return float(self.b)
        r = np.asarray(self.table_r)
        g = np.asarray(self.table_dv)
        # radial Hessian eigenvalues are v''(r) and v'(r)/r; both piecewise monotone
        seg = np.diff(g) / np.diff(r)
        return float(max(seg.max(), np.max(g[1:] / r[1:])))

    @property
    def grad_bound(self) -> float:
        """``sup |grad V|``; infinite for the quadratic kind unless ``b == 0``."""
        if self.interaction == "quadratic":
            return 0.0 if self.b == 0 else float("inf")
        return float(np.max(np.abs(self.table_dv)))

    @property
    def is_gaussian(self) -> bool:
        return (self.confinement == "quadratic" or self.q == 0) and self.interaction == "quadratic"

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "beta": self.beta,
            "confinement": self.confinement,
            "a": self.a,
            "q": self.q,
            "interaction": self.interaction,
            "b": self.b,
            "dimension": self.dimension,
        }
        if self.interaction == "tabulated":
            out["table_r"] = list(self.table_r)
            out["table_dv"] = list(self.table_dv)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown model keys: {sorted(unknown)}")
        return cls(**data)


def save_spec(spec: ModelSpec, path) -> None:
    """Write ``spec`` as a flat JSON object. Floats round-trip exactly."""
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n")


def load_spec(path) -> ModelSpec:
    return ModelSpec.from_dict(json.loads(Path(path).read_text()))


# -- potentials ---------------------------------------------------------------


def as_configuration(spec: ModelSpec, x) -> np.ndarray:
    """Validate ``x`` and return it as a float array of shape ``(..., n, d)``.

    A 1-D input is read as n particles in dimension 1.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1 and spec.dimension == 1:
        x = x[:, None]
    if x.ndim < 2 or x.shape[-1] != spec.dimension:
        raise DomainError(f"configuration shape {x.shape} incompatible with d={spec.dimension}")
    if not np.all(np.isfinite(x)):
        raise DomainError("configuration has non-finite entries")
    return x


def confinement(spec: ModelSpec, x) -> np.ndarray:
    """U evaluated on the last axis of ``x``."""
    r2 = np.sum(np.square(x), axis=-1)
    return 0.5 * spec.a * r2 + 0.25 * spec.q * r2 * r2


def grad_confinement(spec: ModelSpec, x) -> np.ndarray:
    r2 = np.sum(np.square(x), axis=-1, keepdims=True)
    return (spec.a + spec.q * r2) * x


def _table_potential(spec: ModelSpec, r):
    # exact integral of the piecewise-linear v'
    rt = np.asarray(spec.table_r)
    gt = np.asarray(spec.table_dv)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (gt[1:] + gt[:-1]) * np.diff(rt))])
    r = np.asarray(r, dtype=float)
    idx = np.clip(np.searchsorted(rt, r, side="right") - 1, 0, rt.size - 2)
    r0 = rt[idx]
    g0 = gt[idx]
    slope = (gt[idx + 1] - g0) / (rt[idx + 1] - r0)
    dr = r - r0
    inside = cum[idx] + g0 * dr + 0.5 * slope * dr * dr
    outside = cum[-1] + gt[-1] * (r - rt[-1])
    return np.where(r <= rt[-1], inside, outside)


def _table_slope(spec: ModelSpec, r):
    return np.interp(r, spec.table_r, spec.table_dv)


def interaction(spec: ModelSpec, z) -> np.ndarray:
    """V evaluated on displacement vectors ``z`` (last axis = d)."""
    z = np.asarray(z, dtype=float)
    if spec.interaction == "quadratic":
        return 0.5 * spec.b * np.sum(np.square(z), axis=-1)
    return _table_potential(spec, np.linalg.norm(z, axis=-1))


def grad_interaction(spec: ModelSpec, z) -> np.ndarray:
    """grad V at displacement ``z``, so that ``grad_1 V(x, y) = grad_interaction(x - y)``."""
    z = np.asarray(z, dtype=float)
    if spec.interaction == "quadratic":
        return spec.b * z
    r = np.linalg.norm(z, axis=-1, keepdims=True)
    g = _table_slope(spec, r)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(r > 0, z / np.where(r > 0, r, 1.0), 0.0)
    return g * unit


def _energy(spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    # no validation; x has shape (..., n, d)
    n = x.shape[-2]
    conf = np.sum(confinement(spec, x), axis=-1)
    if spec.interaction == "quadratic":
        # sum_{i<j} |x_i - x_j|^2 = n sum_i |x_i|^2 - |sum_i x_i|^2
        s2 = np.sum(np.square(x), axis=(-2, -1))
        m2 = np.sum(np.square(np.sum(x, axis=-2)), axis=-1)
        pair = 0.5 * spec.b * (n * s2 - m2)
    else:
        diff = x[..., :, None, :] - x[..., None, :, :]
        pair = 0.5 * np.sum(interaction(spec, diff), axis=(-2, -1))
    return spec.beta * (conf + pair / (n - 1))


def _drift(spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    n = x.shape[-2]
    gu = grad_confinement(spec, x)
    if spec.interaction == "quadratic":
        total = np.sum(x, axis=-2, keepdims=True)
        gv = spec.b * (n * x - total)
    else:
        diff = x[..., :, None, :] - x[..., None, :, :]
        gv = np.sum(grad_interaction(spec, diff), axis=-2)
    return -spec.beta * (gu + gv / (n - 1))


def energy(spec: ModelSpec, x) -> np.ndarray:
    """Full Gibbs exponent, so that the n-particle density is ``exp(-energy)``.

    Returns a float for a single configuration, an array for a batch.

    >>> energy(ModelSpec(a=1.0, b=0.0), [1.0, 2.0])
    2.5
    """
    x = as_configuration(spec, x)
    if x.shape[-2] < 2:
        raise DomainError("energy needs n >= 2 particles")
    out = _energy(spec, x)
    return float(out) if np.ndim(out) == 0 else out


def drift_all(spec: ModelSpec, x) -> np.ndarray:
    """Langevin drift ``-grad energy`` for every particle, shape ``(..., n, d)``."""
    x = as_configuration(spec, x)
    if x.shape[-2] < 2:
        raise DomainError("drift needs n >= 2 particles")
    return _drift(spec, x)


def drift(spec: ModelSpec, x, i: int) -> np.ndarray:
    """Drift of particle ``i`` (0-based) in configuration ``x`` of shape ``(n, d)``."""
    x = as_configuration(spec, x)
    if x.ndim != 2:
        raise DomainError("drift(i) expects a single (n, d) configuration")
    n = x.shape[0]
    if not 0 <= i < n:
        raise IndexError(f"particle index {i} out of range for n={n}")
    if n < 2:
        raise DomainError("drift needs n >= 2 particles")
    xi = x[i]
    others = np.delete(x, i, axis=0)
    gv = np.sum(grad_interaction(spec, xi - others), axis=0)
    return -spec.beta * (grad_confinement(spec, xi) + gv / (n - 1))
