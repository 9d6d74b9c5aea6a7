import math

import numpy as np
import pytest

from chaosmeter import meanfield as mf
from chaosmeter.errors import DomainError, NonConvergenceError
from chaosmeter.meanfield import GridDensity
from chaosmeter.model import ModelSpec

GRID = (-8.0, 8.0, 2048)


@pytest.fixture(scope="module")
def solved11():
    return mf.solve_fixed_point(ModelSpec(a=1.0, b=1.0), GRID, damping=0.5, tol=1e-10)


class TestGridDensity:
    def test_normalization_and_moments(self):
        g = mf.gaussian_on_grid(0.5, *GRID)
        assert g.integral() == pytest.approx(1.0, abs=1e-14)
        assert g.moment(1) == pytest.approx(0.0, abs=1e-14)
        assert g.moment(2) == pytest.approx(0.5, rel=1e-10)

    def test_from_function_matches_from_log(self):
        a = GridDensity.from_function(lambda x: np.exp(-x * x), -5, 5, 129)
        b = GridDensity.from_log(lambda x: -x * x, -5, 5, 129)
        np.testing.assert_allclose(a.values, b.values, rtol=1e-13)
        assert a.log_norm == pytest.approx(b.log_norm, rel=1e-13)
        assert a.log_norm == pytest.approx(0.5 * math.log(math.pi), rel=1e-8)

    @pytest.mark.parametrize(
        "lo,hi,vals",
        [(0.0, 1.0, np.ones(10)), (1.0, 0.0, np.ones(64)), (0.0, 1.0, -np.ones(64)), (0.0, 1.0, np.full(64, np.nan))],
    )
    def test_rejects(self, lo, hi, vals):
        with pytest.raises(DomainError):
            GridDensity(lo, hi, vals)

    def test_csv_round_trip(self, tmp_path):
        g = mf.gaussian_on_grid(0.3, -4, 4, 257)
        mf.write_csv(g, tmp_path / "mu.csv")
        back = mf.read_csv(tmp_path / "mu.csv")
        assert (back.lo, back.hi, back.m) == (g.lo, g.hi, g.m)
        np.testing.assert_array_equal(back.values, g.values)
        assert (tmp_path / "mu.csv").read_text().splitlines()[0] == "x,density"


class TestSolver:
    def test_no_interaction_one_step(self):
        spec = ModelSpec(a=1.0, b=0.0)
        res = mf.solve_fixed_point(spec, GRID)
        assert res.converged and res.iterations == 1
        np.testing.assert_allclose(res.density.values, mf.reference_density(spec, GRID).values, rtol=1e-13)

    def test_gaussian_fixed_point(self, solved11):
        assert solved11.converged
        assert solved11.residual <= 1e-10
        err = solved11.density.l1(mf.gaussian_on_grid(0.5, *GRID))
        assert err <= 1e-3
        assert solved11.density.integral() == pytest.approx(1.0, abs=1e-12)

    def test_other_constants(self):
        res = mf.solve_fixed_point(ModelSpec(a=2.0, b=2.0), GRID)
        assert res.density.l1(mf.gaussian_on_grid(0.25, *GRID)) <= 1e-3

    def test_beta(self):
        res = mf.solve_fixed_point(ModelSpec(beta=2.0, a=1.0, b=0.5), (-6.0, 6.0, 1024))
        assert res.density.moment(2) == pytest.approx(1 / (2.0 * 1.5), rel=1e-6)

    def test_symmetric(self, solved11):
        v = solved11.density.values
        np.testing.assert_allclose(v, v[::-1], atol=1e-8)

    def test_certificate(self, solved11):
        spec = ModelSpec(a=1.0, b=1.0)
        assert mf.fixed_point_residual(spec, solved11.density) <= 1e-10
        assert mf.fixed_point_residual(spec, mf.reference_density(spec, GRID)) > 1e-3
        assert mf.fixed_point_residual(spec, mf.gaussian_on_grid(0.5, *GRID)) <= 1e-6

    def test_uniqueness_from_five_starts(self):
        spec = ModelSpec(a=1.0, b=1.0)
        inits = [
            "reference",
            "uniform",
            lambda x: np.exp(-((x - 2.0) ** 2)),
            lambda x: np.exp(-((x + 3.0) ** 2) / 0.5),
            lambda x: np.exp(-((x - 2.5) ** 2)) + np.exp(-((x + 2.5) ** 2)),
        ]
        sols = [mf.solve_fixed_point(spec, GRID, init=i).density for i in inits]
        for s in sols[1:]:
            assert s.l1(sols[0]) <= 1e-6

    def test_nonconvex_confinement_converges(self):
        # quartic confinement still has a unique even fixed point
        spec = ModelSpec(a=1.0, b=0.5, confinement="quartic", q=0.5)
        res = mf.solve_fixed_point(spec, (-6.0, 6.0, 1024))
        assert res.converged
        assert res.density.moment(1) == pytest.approx(0.0, abs=1e-10)
        assert mf.fixed_point_residual(spec, res.density) <= 1e-9

    def test_tabulated_interaction(self, tabulated):
        res = mf.solve_fixed_point(tabulated, (-8.0, 8.0, 1024))
        assert res.converged
        # attraction narrows the law relative to exp(-U)
        assert res.density.moment(2) < 1.0

    def test_uniform_reference(self):
        # lambda uniform on [-4, 4] and quadratic V: mu is a Gaussian with variance 1/b, truncated
        spec = ModelSpec(a=1.0, b=2.0)
        grid = (-4.0, 4.0, 1024)
        res = mf.solve_fixed_point(spec, grid, reference="uniform")
        assert res.converged
        assert res.density.l1(mf.gaussian_on_grid(0.5, *grid)) <= 1e-6

    def test_max_iter_reported(self):
        res = mf.solve_fixed_point(ModelSpec(a=1.0, b=1.0), GRID, init="uniform", max_iter=3)
        assert not res.converged and res.iterations == 3

    def test_divergence_raises(self, monkeypatch):
        spec = ModelSpec(a=1.0, b=1.0)
        lo, hi, m = -4.0, 4.0, 128
        x = np.linspace(lo, hi, m)
        left = np.where(x < 0, 1.0, 0.0)
        state = {"t": 0}

        def apply(self, values):
            # alternating mass with growing amplitude: L1 steps keep increasing
            state["t"] += 1
            w = min(0.01 * state["t"], 0.99)
            side = left if state["t"] % 2 else left[::-1]
            return GridDensity.from_function(lambda _: (1 - w) + 2 * w * side, lo, hi, m)

        monkeypatch.setattr(mf._Operator, "apply", apply)
        with pytest.raises(NonConvergenceError) as exc:
            mf.solve_fixed_point(spec, (lo, hi, m), damping=1.0, max_iter=500)
        assert exc.value.last is not None and exc.value.iterations >= 50

    @pytest.mark.parametrize(
        "kw",
        [dict(damping=0.0), dict(damping=1.5), dict(grid=(1.0, -1.0, 128)), dict(grid=(-1.0, 1.0, 10)),
         dict(init="gaussian"), dict(init=np.zeros(2048)), dict(reference="lebesgue")],
    )
    def test_bad_arguments(self, kw):
        kw.setdefault("grid", GRID)
        with pytest.raises(DomainError):
            mf.solve_fixed_point(ModelSpec(a=1.0, b=1.0), **kw)

    def test_multidimensional_refused(self):
        with pytest.raises(DomainError):
            mf.solve_fixed_point(ModelSpec(a=1.0, b=1.0, dimension=2))


class TestRateFunctional:
    def test_zero_at_reference_without_interaction(self):
        spec = ModelSpec(a=1.0, b=0.0)
        assert mf.rate_functional(spec, mf.reference_density(spec, GRID)) == pytest.approx(0.0, abs=1e-12)

    def test_minimality_probe(self, solved11):
        spec = ModelSpec(a=1.0, b=1.0)
        j_mu = mf.rate_functional(spec, solved11.density)
        assert j_mu < mf.rate_functional(spec, mf.gaussian_on_grid(1.0, *GRID))
        assert j_mu < mf.rate_functional(spec, mf.gaussian_on_grid(0.25, *GRID))
        for var in (0.45, 0.55):
            assert j_mu < mf.rate_functional(spec, mf.gaussian_on_grid(var, *GRID))

    def test_gaussian_closed_form(self):
        # for nu = N(0, v): (b/2) v + KL(N(0,v) | N(0,1/a))
        spec = ModelSpec(a=1.0, b=1.0)
        for v in (0.25, 0.5, 1.0):
            closed = 0.5 * v + 0.5 * (v - 1 - math.log(v))
            assert mf.rate_functional(spec, mf.gaussian_on_grid(v, *GRID)) == pytest.approx(closed, abs=1e-8)

    def test_grid_refinement(self):
        spec = ModelSpec(a=1.0, b=1.0)
        j1 = mf.rate_functional(spec, mf.gaussian_on_grid(0.7, -8, 8, 1024))
        j2 = mf.rate_functional(spec, mf.gaussian_on_grid(0.7, -8, 8, 2048))
        assert abs(j1 - j2) <= 1e-4

    def test_infinite_when_reference_vanishes(self):
        spec = ModelSpec(a=1.0, b=1.0)
        lo, hi, m = -4.0, 4.0, 128
        ref = np.where(np.linspace(lo, hi, m) > 0, 1.0, 0.0)
        nu = mf.gaussian_on_grid(1.0, lo, hi, m)
        assert mf.rate_functional(spec, nu, reference=ref) == math.inf
        half = GridDensity.from_function(lambda x: ref * np.exp(-x * x), lo, hi, m)
        assert math.isfinite(mf.rate_functional(spec, half, reference=ref))
