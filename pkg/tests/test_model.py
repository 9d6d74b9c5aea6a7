import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chaosmeter import model
from chaosmeter.errors import DomainError
from chaosmeter.model import ModelSpec


class TestModelSpec:
    def test_defaults(self):
        s = ModelSpec()
        assert s.beta == 1.0 and s.kappa == 1.0 and s.lipschitz_L == 0.0
        assert s.is_gaussian

    @pytest.mark.parametrize(
        "kw",
        [
            dict(beta=0.0),
            dict(a=-1.0),
            dict(b=-0.1),
            dict(confinement="sextic"),
            dict(interaction="coulomb"),
            dict(q=1.0),
            dict(confinement="quartic", q=-1.0),
            dict(dimension=0),
            dict(table_r=(0.0, 1.0), table_dv=(0.0, 1.0)),
            dict(interaction="tabulated", table_r=(0.0,), table_dv=(0.0,)),
            dict(interaction="tabulated", table_r=(0.5, 1.0), table_dv=(0.0, 1.0)),
            dict(interaction="tabulated", table_r=(0.0, 1.0, 0.5), table_dv=(0.0, 1.0, 1.0)),
            dict(interaction="tabulated", table_r=(0.0, 1.0, 2.0), table_dv=(0.0, 1.0, 0.5)),
        ],
    )
    def test_rejects_invalid(self, kw):
        with pytest.raises(DomainError):
            ModelSpec(**kw)

    def test_tabulated_constants(self, tabulated):
        assert tabulated.lipschitz_L == pytest.approx(0.5)
        assert tabulated.grad_bound == pytest.approx(0.5)
        assert not tabulated.is_gaussian

    def test_tabulated_L_uses_secant(self):
        # v'(r)/r can exceed the segment slopes when v' jumps early
        s = ModelSpec(interaction="tabulated", table_r=(0.0, 0.1, 5.0), table_dv=(0.0, 1.0, 1.0))
        assert s.lipschitz_L == pytest.approx(10.0)

    def test_json_round_trip(self, tmp_path, tabulated):
        for spec in (ModelSpec(beta=0.7, a=1.3, b=0.1 + 0.2), tabulated,
                     ModelSpec(confinement="quartic", q=0.25, dimension=2)):
            path = tmp_path / "spec.json"
            model.save_spec(spec, path)
            assert model.load_spec(path) == spec
            json.loads(path.read_text())

    def test_from_dict_unknown_key(self):
        with pytest.raises(DomainError):
            ModelSpec.from_dict({"a": 1.0, "temperature": 2.0})


class TestEnergy:
    def test_origin(self, gauss11):
        assert model.energy(gauss11, [0.0, 0.0]) == 0.0

    def test_no_interaction(self):
        assert model.energy(ModelSpec(a=1.0, b=0.0), [1.0, 2.0]) == pytest.approx(2.5)

    def test_two_particles_hand_value(self):
        # U-sum 1, plus V(2) = 2 * 4 / 2 = 4 with weight 1/(n-1) = 1
        assert model.energy(ModelSpec(a=1.0, b=2.0), [1.0, -1.0]) == pytest.approx(5.0)

    def test_matches_precision_quadratic_form(self, rng):
        from chaosmeter.gaussian import GaussianCovSpec

        a, b, n = 1.3, 0.7, 9
        x = rng.standard_normal(n)
        prec = GaussianCovSpec(a, b, n).precision()
        assert model.energy(ModelSpec(a=a, b=b), x) == pytest.approx(0.5 * x @ prec @ x, rel=1e-12)

    def test_beta_scales(self, rng):
        x = rng.standard_normal((5, 2))
        e1 = model.energy(ModelSpec(a=1.0, b=0.5, dimension=2), x)
        e3 = model.energy(ModelSpec(beta=3.0, a=1.0, b=0.5, dimension=2), x)
        assert e3 == pytest.approx(3 * e1)

    def test_quadratic_fast_path_matches_pairwise(self, rng):
        # a tabulated v'(r) = b r reproduces the quadratic interaction
        b = 0.8
        tab = ModelSpec(a=1.0, interaction="tabulated", table_r=(0.0, 100.0), table_dv=(0.0, 100.0 * b))
        quad = ModelSpec(a=1.0, b=b)
        x = rng.standard_normal((4, 7, 1))
        np.testing.assert_allclose(model.energy(tab, x), model.energy(quad, x), rtol=1e-12)
        np.testing.assert_allclose(model.drift_all(tab, x), model.drift_all(quad, x), rtol=1e-12, atol=1e-14)

    def test_batch_shape(self, gauss11, rng):
        x = rng.standard_normal((3, 4, 6, 1))
        assert model.energy(gauss11, x).shape == (3, 4)

    def test_rejects_nonfinite(self, gauss11):
        with pytest.raises(DomainError):
            model.energy(gauss11, [0.0, np.nan])

    def test_rejects_single_particle(self, gauss11):
        with pytest.raises(DomainError):
            model.energy(gauss11, [1.0])

    def test_rejects_wrong_dimension(self, gauss11):
        with pytest.raises(DomainError):
            model.energy(gauss11, np.zeros((3, 2)))

    @settings(max_examples=60, deadline=None)
    @given(
        x=arrays(np.float64, st.tuples(st.integers(2, 8), st.just(2)),
                 elements=st.floats(-5, 5, allow_nan=False)),
        seed=st.integers(0, 2**32 - 1),
        tab=st.booleans(),
    )
    def test_permutation_invariant(self, x, seed, tab):
        if tab:
            spec = ModelSpec(a=0.5, confinement="quartic", q=0.3, interaction="tabulated",
                             table_r=(0.0, 1.0, 3.0), table_dv=(0.0, 0.4, 1.0), dimension=2)
        else:
            spec = ModelSpec(a=0.5, b=1.5, dimension=2)
        perm = np.random.default_rng(seed).permutation(x.shape[0])
        assert model.energy(spec, x[perm]) == pytest.approx(model.energy(spec, x), rel=1e-12, abs=1e-12)


class TestDrift:
    def test_zero_configuration(self, tabulated):
        np.testing.assert_array_equal(model.drift(tabulated, np.zeros(4), 2), [0.0])

    def test_hand_values(self):
        assert model.drift(ModelSpec(a=1.0, b=1.0), [1.0, 0.0], 0)[0] == pytest.approx(-2.0)
        assert model.drift(ModelSpec(a=2.0, b=0.0), [3.0, 5.0], 0)[0] == pytest.approx(-6.0)

    def test_index_out_of_range(self, gauss11):
        with pytest.raises(IndexError):
            model.drift(gauss11, [1.0, 2.0], 2)
        with pytest.raises(IndexError):
            model.drift(gauss11, [1.0, 2.0], -1)

    def test_quadratic_closed_form(self, rng):
        a, b, beta, n = 1.2, 0.6, 0.9, 6
        spec = ModelSpec(beta=beta, a=a, b=b)
        x = rng.standard_normal(n)
        expected = -beta * ((a + b * n / (n - 1)) * x - b / (n - 1) * x.sum())
        np.testing.assert_allclose(model.drift_all(spec, x)[:, 0], expected, rtol=1e-12)
        for i in range(n):
            assert model.drift(spec, x, i)[0] == pytest.approx(expected[i], rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(
        x=arrays(np.float64, st.tuples(st.integers(2, 6), st.integers(1, 3)),
                 elements=st.floats(-3, 3, allow_nan=False)),
        which=st.sampled_from(["quadratic", "quartic", "tabulated"]),
    )
    def test_finite_difference_gradient(self, x, which):
        d = x.shape[1]
        if which == "quadratic":
            spec = ModelSpec(beta=1.3, a=0.7, b=0.9, dimension=d)
        elif which == "quartic":
            spec = ModelSpec(a=0.7, b=0.4, confinement="quartic", q=0.2, dimension=d)
        else:
            # smooth enough away from kinks; central differences stay O(h^2) off them
            spec = ModelSpec(a=1.0, interaction="tabulated", table_r=(0.0, 50.0),
                             table_dv=(0.0, 25.0), dimension=d)
        g = model.drift_all(spec, x)
        h = 1e-6
        fd = np.empty_like(x)
        for idx in np.ndindex(*x.shape):
            xp, xm = x.copy(), x.copy()
            xp[idx] += h
            xm[idx] -= h
            fd[idx] = -(model.energy(spec, xp) - model.energy(spec, xm)) / (2 * h)
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-5)

    def test_tabulated_potential_integrates_slope(self, tabulated):
        r = np.linspace(0.0, 4.0, 4001)
        v = model.interaction(tabulated, r[:, None])
        dv = np.gradient(v, r)
        np.testing.assert_allclose(dv[1:-1], np.interp(r, tabulated.table_r, tabulated.table_dv)[1:-1], atol=1e-3)
        # constant slope past the table end
        assert model.interaction(tabulated, [[3.0]]) - model.interaction(tabulated, [[2.0]]) == pytest.approx(0.5)
