"""Mean-field fixed point and rate functional on a 1-D grid.

The limiting one-particle law solves

    mu(dx) = exp(-beta <mu, V(x - .)>) lambda(dx) / Z

with ``lambda(dx) ∝ exp(-beta U(x)) dx`` (or uniform on the grid interval).
It is found by damped iteration of the map on the right-hand side, with
trapezoidal quadrature and a dense interaction matrix.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import toeplitz

from . import model
from .errors import DomainError, NonConvergenceError

MIN_POINTS = 64
DIVERGENCE_PATIENCE = 50


def trapezoid_weights(lo: float, hi: float, m: int) -> np.ndarray:
    w = np.full(m, (hi - lo) / (m - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


@dataclass(frozen=True)
class GridDensity:
    """Probability density tabulated on ``m`` equispaced points of ``[lo, hi]``.

    ``log_norm`` is the log of the constant that normalized the values when
    the density was built (0 when supplied already normalized).
    """

    lo: float
    hi: float
    values: np.ndarray
    log_norm: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not self.lo < self.hi:
            raise DomainError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if values.ndim != 1 or values.size < MIN_POINTS:
            raise DomainError(f"grid needs at least {MIN_POINTS} points")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise DomainError("density values must be finite and nonnegative")
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.m)

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.lo, self.hi, self.m)

    def integral(self) -> float:
        return float(self.weights @ self.values)

    def moment(self, p: int) -> float:
        return float(self.weights @ (self.values * self.x**p))

    def l1(self, other) -> float:
        """Trapezoidal L1 distance to another density (or values) on the same grid."""
        other = other.values if isinstance(other, GridDensity) else np.asarray(other)
        return float(self.weights @ np.abs(self.values - other))

    @classmethod
    def from_function(cls, f, lo: float, hi: float, m: int) -> "GridDensity":
        """Tabulate an unnormalized density ``f`` and normalize it."""
        x = np.linspace(lo, hi, m)
        vals = np.asarray(f(x), dtype=float)
        z = float(trapezoid_weights(lo, hi, m) @ vals)
        if not z > 0:
            raise DomainError("function has no mass on the grid")
        return cls(lo, hi, vals / z, math.log(z))

    @classmethod
    def from_log(cls, logf, lo: float, hi: float, m: int) -> "GridDensity":
        """Like :meth:`from_function` but from a log-density, avoiding underflow."""
        x = np.linspace(lo, hi, m)
        lv = np.asarray(logf(x), dtype=float)
        top = lv.max()
        vals = np.exp(lv - top)
        z = float(trapezoid_weights(lo, hi, m) @ vals)
        return cls(lo, hi, vals / z, math.log(z) + top)


def gaussian_on_grid(var: float, lo: float, hi: float, m: int, mean: float = 0.0) -> GridDensity:
    return GridDensity.from_log(lambda x: -0.5 * (x - mean) ** 2 / var, lo, hi, m)


def default_grid(spec: model.ModelSpec, m: int = 2048) -> tuple:
    """``[-8 s, 8 s]`` with ``s = 1/sqrt(beta kappa)``."""
    s = 1.0 / math.sqrt(spec.beta * spec.kappa)
    return (-8.0 * s, 8.0 * s, m)


def _check_1d(spec):
    if spec.dimension != 1:
        raise DomainError("the mean-field solver is one-dimensional")


def reference_log_density(spec: model.ModelSpec, x, reference="gibbs") -> np.ndarray:
    """Unnormalized log of the reference measure lambda on the grid."""
    if isinstance(reference, str):
        if reference == "gibbs":
            return -spec.beta * model.confinement(spec, x[:, None])
        if reference == "uniform":
            return np.zeros_like(x)
        raise DomainError(f"unknown reference {reference!r}")
    ref = np.asarray(reference, dtype=float)
    if ref.shape != x.shape or np.any(ref < 0):
        raise DomainError("reference array must be nonnegative with one value per grid point")
    with np.errstate(divide="ignore"):
        return np.log(ref)


class _Operator:
    """The fixed-point map for a given model, grid and reference measure."""

    def __init__(self, spec, lo, hi, m, reference="gibbs", strict=True):
        _check_1d(spec)
        if not lo < hi:
            raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
        if m < MIN_POINTS:
            raise DomainError(f"grid needs at least {MIN_POINTS} points")
        self.spec = spec
        self.lo, self.hi, self.m = float(lo), float(hi), int(m)
        self.x = np.linspace(lo, hi, m)
        self.w = trapezoid_weights(lo, hi, m)
        log_ref = reference_log_density(spec, self.x, reference)
        if strict and not np.all(np.isfinite(log_ref)):
            raise DomainError("reference density must be positive on the grid")
        top = log_ref.max()
        if not np.isfinite(top):
            raise DomainError("reference density vanishes on the whole grid")
        z = float(self.w @ np.exp(log_ref - top))
        self.log_ref = log_ref - top - math.log(z)  # log of a probability density
        # V(x_i - x_j) depends on i - j only
        offsets = self.x - self.x[0]
        self.vmat = toeplitz(model.interaction(spec, offsets[:, None]))

    def reference(self) -> GridDensity:
        return GridDensity(self.lo, self.hi, np.exp(self.log_ref), 0.0)

    def potential(self, values) -> np.ndarray:
        """``<nu, V(x - .)>`` at every grid point."""
        return self.vmat @ (self.w * values)

    def apply(self, values) -> GridDensity:
        logits = -self.spec.beta * self.potential(values) + self.log_ref
        top = logits.max()
        out = np.exp(logits - top)
        z = float(self.w @ out)
        return GridDensity(self.lo, self.hi, out / z, math.log(z) + top)


class FixedPointResult(NamedTuple):
    density: GridDensity
    iterations: int
    residual: float
    converged: bool


def _initial_values(op: _Operator, init):
    if isinstance(init, GridDensity):
        if init.m != op.m or init.lo != op.lo or init.hi != op.hi:
            raise DomainError("initial density lives on a different grid")
        vals = init.values
    elif isinstance(init, str):
        if init == "reference":
            vals = np.exp(op.log_ref)
        elif init == "uniform":
            vals = np.ones(op.m)
        else:
            raise DomainError(f"unknown initialization {init!r}")
    elif callable(init):
        vals = np.asarray(init(op.x), dtype=float)
    else:
        vals = np.asarray(init, dtype=float)
    if vals.shape != (op.m,) or np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise DomainError("initial density must be finite, nonnegative, one value per grid point")
    z = float(op.w @ vals)
    if not z > 0:
        raise DomainError("initial density has no mass")
    return vals / z


def solve_fixed_point(
    spec: model.ModelSpec,
    grid=None,
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    init="reference",
    reference="gibbs",
) -> FixedPointResult:
    """Damped iteration ``nu <- (1 - damping) nu + damping * T(nu)``.

    Args:
        spec: one-dimensional model.
        grid: ``(lo, hi, m)``; defaults to :func:`default_grid`.
        damping: mixing weight in ``(0, 1]``.
        tol: stop once the L1 distance between consecutive iterates is ``<= tol``.
        max_iter: iteration cap; reaching it is reported through
            ``converged=False`` rather than raised.
        init: ``"reference"``, ``"uniform"``, a :class:`GridDensity`, an array
            of grid values or a callable of the grid points.
        reference: ``"gibbs"`` for ``exp(-beta U)``, ``"uniform"``, or an array.

    Raises:
        NonConvergenceError: the residual grew for 50 consecutive iterations.
    """
    if not 0 < damping <= 1:
        raise DomainError(f"damping must lie in (0, 1], got {damping}")
    lo, hi, m = grid if grid is not None else default_grid(spec)
    op = _Operator(spec, lo, hi, m, reference)
    vals = _initial_values(op, init)
    residual = math.inf
    growing = 0
    current = None
    for it in range(1, max_iter + 1):
        image = op.apply(vals)
        new = (1 - damping) * vals + damping * image.values
        new_residual = float(op.w @ np.abs(new - vals))
        growing = growing + 1 if new_residual > residual else 0
        residual = new_residual
        vals = new
        # log_norm of a damped mixture is not meaningful; keep the image's
        current = GridDensity(op.lo, op.hi, vals, image.log_norm)
        if residual <= tol:
            return FixedPointResult(current, it, residual, True)
        if growing >= DIVERGENCE_PATIENCE:
            raise NonConvergenceError(
                f"residual increased for {growing} consecutive iterations",
                last=current,
                iterations=it,
                residual=residual,
            )
    return FixedPointResult(current, max_iter, residual, False)


def fixed_point_residual(spec: model.ModelSpec, nu: GridDensity, reference="gibbs") -> float:
    """L1 distance between ``nu`` and its image under the (undamped) fixed-point map."""
    op = _Operator(spec, nu.lo, nu.hi, nu.m, reference)
    return nu.l1(op.apply(nu.values))


def rate_functional(spec: model.ModelSpec, nu: GridDensity, reference="gibbs") -> float:
    """``J(nu) = (beta/2) <nu x nu, V> + H(nu | lambda)`` by trapezoidal quadrature.

    The factor 1/2 pairs the energy's ``1/(n-1) sum_{i<j}`` normalization with
    the fixed-point map, so that critical points of J are exactly its fixed
    points. Returns ``inf`` when ``nu`` charges a point where lambda vanishes.
    """
    op = _Operator(spec, nu.lo, nu.hi, nu.m, reference, strict=False)
    w, v = op.w, nu.values
    pair = float((w * v) @ op.potential(v))
    pos = v > 0
    if np.any(~np.isfinite(op.log_ref[pos])):
        return math.inf
    ent = float(np.sum(w[pos] * v[pos] * (np.log(v[pos]) - op.log_ref[pos])))
    return 0.5 * spec.beta * pair + ent


def reference_density(spec: model.ModelSpec, grid=None, reference="gibbs") -> GridDensity:
    """The normalized reference measure lambda on the grid."""
    lo, hi, m = grid if grid is not None else default_grid(spec)
    return _Operator(spec, lo, hi, m, reference).reference()


def write_csv(nu: GridDensity, path) -> None:
    """Two-column CSV ``x,density``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "density"])
        for xi, vi in zip(nu.x, nu.values):
            writer.writerow([repr(float(xi)), repr(float(vi))])


def read_csv(path) -> GridDensity:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != ["x", "density"]:
        raise DomainError("expected header 'x,density'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    return GridDensity(data[0, 0], data[-1, 0], data[:, 1])
