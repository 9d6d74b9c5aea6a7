import csv
import json
import math

import numpy as np
import pytest

from chaosmeter import bounds as bd
from chaosmeter import gaussian as g
from chaosmeter.bounds import BoundParams
from chaosmeter.errors import DomainError, HypothesisError


def c_main_reference(beta, gamma):
    # independent re-evaluation, written with numpy in a different arrangement
    x = beta**2 * gamma
    L = -np.log(x)
    return 8 * np.pi * (1 + x) / (L * (1 - np.sqrt(x)) ** 2) + 32 * np.pi / (np.e * L * L)


class TestMainBound:
    def test_hand_values(self):
        C = bd.main_constant(1.0, 0.25)
        assert C == pytest.approx(c_main_reference(1.0, 0.25), rel=1e-12)
        assert C == pytest.approx(109.9, rel=0.01)
        rhs = bd.thm_main_rhs(BoundParams(beta=1.0, M=1.0, gamma=0.25), 100, 2)
        assert rhs == pytest.approx(2 * (C / 99 + 0.5**98) ** 2, rel=1e-12)
        assert rhs == pytest.approx(2.46, rel=0.01)

    def test_decays_like_inverse_square(self):
        p = BoundParams(beta=1.0, M=1.0, gamma=0.25)
        n = np.logspace(2, 6, 9).astype(int)
        rhs = [bd.thm_main_rhs(p, int(v), 2) for v in n]
        assert bd.loglog_slope(n, rhs) == pytest.approx(-2.0, abs=0.01)

    def test_constant_diverges_at_threshold(self):
        gam = [0.9, 0.99, 0.999, 0.9999]
        C = [bd.main_constant(1.0, x) for x in gam]
        assert all(c2 > c1 for c1, c2 in zip(C, C[1:]))
        assert C[-1] > 1e6

    @pytest.mark.parametrize(
        "p,n,k",
        [
            (BoundParams(M=1.0, gamma=1.0), 10, 2),
            (BoundParams(beta=2.0, M=1.0, gamma=0.3), 10, 2),
            (BoundParams(M=1.0), 10, 2),
            (BoundParams(M=1.0, gamma=0.25), 10, 1),
            (BoundParams(M=1.0, gamma=0.25), 10, 10),
            (BoundParams(M=-1.0, gamma=0.25), 10, 2),
            (BoundParams(beta=0.0, M=1.0, gamma=0.25), 10, 2),
        ],
    )
    def test_hypotheses(self, p, n, k):
        with pytest.raises(HypothesisError):
            bd.thm_main_rhs(p, n, k)

    def test_bounded_interaction_variant(self):
        p = BoundParams(beta=1.0, L=1.0, c_mu=0.5)
        expected = bd.thm_main_rhs(BoundParams(beta=1.0, M=2.0, gamma=0.5), 50, 3)
        assert bd.cor_bounded_rhs(p, 50, 3) == pytest.approx(expected)
        with pytest.raises(HypothesisError):
            bd.cor_bounded_rhs(BoundParams(beta=1.0, L=1.0, c_mu=1.0), 50, 3)


class TestConvexBound:
    def test_chain_relations(self):
        p = BoundParams(beta=2.0, kappa=1.5, L=0.5, d=2)
        f, kl, w2 = bd.cor_convex_rhs(p, 60, 4)
        assert kl == pytest.approx(f / (2 * 2.0 * 1.5))
        assert w2 == pytest.approx(f / (2.0 * 1.5) ** 2)

    def test_constant_reference(self):
        r = 0.5
        ref = 4 * math.pi / ((1 - r) ** 2 * math.log(1 / r)) * ((1 + r * r) / (1 - r) ** 2 + 2 / (math.e * math.log(1 / r)))
        assert bd.convex_constant(1.0, 0.5) == pytest.approx(ref, rel=1e-14)

    def test_dominates_exact_gaussian(self):
        exact = g.marginal_divergences(1.0, 0.5, 200, 2)
        f, kl, w2 = bd.cor_convex_rhs(BoundParams(beta=1.0, kappa=1.0, L=0.5), 200, 2)
        assert exact.fisher <= f and exact.kl <= kl and exact.w2sq <= w2

    def test_no_interaction(self):
        assert bd.cor_convex_rhs(BoundParams(kappa=1.0, L=0.0), 10, 2) == (0.0, 0.0, 0.0)
        small = bd.cor_convex_rhs(BoundParams(kappa=1.0, L=1e-4), 10, 2)[0]
        assert 0 < small < 1e-6

    def test_requires_L_below_kappa(self):
        with pytest.raises(HypothesisError):
            bd.cor_convex_rhs(BoundParams(kappa=1.0, L=1.0), 10, 2)


class TestReversed:
    def test_small_alpha_regime(self):
        p = BoundParams(beta=1.0, M=1.0, gamma=0.5, eta=0.5, epsilon=0.1)
        alpha = 0.5 * 0.5 * 1.1
        assert alpha == pytest.approx(0.275)
        n = np.logspace(3, 6, 7).astype(int)
        rhs = [bd.thm_main_rev_rhs(p, int(v), 2) for v in n]
        assert bd.loglog_slope(2 / n, rhs) == pytest.approx(2.0, abs=0.01)

    def test_large_alpha_regime(self):
        # alpha = eta gamma beta^2 (1 + eps) = 1
        p = BoundParams(beta=1.0, M=1.0, gamma=0.8, eta=1.0, epsilon=0.25)
        n = np.logspace(3, 6, 7).astype(int)
        rhs = [bd.thm_main_rev_rhs(p, int(v), 2) for v in n]
        assert bd.loglog_slope(2 / n, rhs) == pytest.approx(1.0, abs=0.01)

    def test_last_k_gives_prefactor(self):
        p = BoundParams(beta=1.0, M=2.0, gamma=0.5, eta=0.5, epsilon=0.1)
        alpha = 0.275
        pref = (1 + 2 * alpha) ** (1 / alpha) / (0.1 * 0.5 * alpha * abs(1 - 2 * alpha)) + 2 * 0.5 * 2.0
        assert bd.thm_main_rev_rhs(p, 30, 29) == pytest.approx(pref, rel=1e-12)

    def test_alpha_half_refused(self):
        with pytest.raises(HypothesisError, match="smaller epsilon"):
            bd.thm_main_rev_rhs(BoundParams(beta=1.0, M=1.0, gamma=0.25, eta=1.0, epsilon=1.0), 10, 2)

    def test_convex_constant_hand_value(self):
        p = BoundParams(beta=1.0, kappa=1.0, L=0.5, epsilon=0.1, d=1)
        alpha = bd.cor_convex_rev_alpha(p)
        assert alpha == pytest.approx(0.275)
        ref = 11.0 * 1.55 ** (1 / 0.275) / (2 * 0.275**2 * 0.45) + 0.275
        assert bd.cor_convex_rev_constant(p) == pytest.approx(ref, rel=1e-12)
        assert bd.cor_convex_rev_constant(p) == pytest.approx(795.7, rel=0.01)

    def test_convex_dominates_exact(self):
        p = BoundParams(beta=1.0, kappa=1.0, L=0.5, epsilon=0.1)
        for n in (20, 50, 100, 200, 400):
            for k in range(1, 9):
                assert g.marginal_divergences(1.0, 0.5, n, k).kl_reversed <= bd.cor_convex_rev_rhs(p, n, k)

    def test_no_interaction_refused(self):
        with pytest.raises(HypothesisError):
            bd.cor_convex_rev_rhs(BoundParams(kappa=1.0, L=0.0, epsilon=0.1), 10, 2)

    def test_rate(self):
        assert bd.reversed_rate(0.25, 10, 9) == 1.0
        assert bd.reversed_rate(1.0, 11, 1) == pytest.approx(2 / 11)


class TestBaselineAndHelpers:
    def test_subadditivity(self):
        assert bd.subadditivity_bound(0.0, 10, 2) == 0.0
        with pytest.raises(DomainError):
            bd.subadditivity_bound(-1.0, 10, 2)

    def test_subadditivity_holds_on_gaussians(self):
        for n in (10, 20, 50, 100, 200):
            h = g.marginal_divergences(1.0, 1.0, n, n).kl
            for k in range(1, 9):
                assert g.marginal_divergences(1.0, 1.0, n, k).kl <= bd.subadditivity_bound(h, n, k)

    def test_baseline_ratio_vanishes(self):
        ns = [50, 100, 200, 400, 800, 1600]
        ratio = []
        for n in ns:
            h = g.marginal_divergences(1.0, 1.0, n, n).kl
            ratio.append(g.marginal_divergences(1.0, 1.0, n, 2).kl / bd.subadditivity_bound(h, n, 2))
        assert all(r2 < r1 for r1, r2 in zip(ratio, ratio[1:]))
        assert ratio[-1] < 0.05

    def test_gamma(self):
        assert bd.gaussian_gamma(1.0, 1.0) == 0.25
        assert bd.gaussian_gamma(1.0, 0.0) == 0.0
        assert bd.gaussian_gamma(3.0, 1.0) == 1 / 16

    def test_hamming_pinsker(self):
        assert bd.hamming_pinsker_bounds(1.0, 3, 0.0, 0.08) == (0.0, pytest.approx(0.4))
        assert bd.hamming_pinsker_bounds(1.0, 4, 0.01, 0.0)[0] == pytest.approx(0.04)
        with pytest.raises(DomainError):
            bd.hamming_pinsker_bounds(-1.0, 1, 0.0, 0.0)

    def test_loglog_slope(self):
        x = np.array([1.0, 2.0, 4.0])
        assert bd.loglog_slope(x, 3 * x**2) == pytest.approx(2.0)
        with pytest.raises(DomainError):
            bd.loglog_slope([1.0, 0.0], [1.0, 1.0])

    def test_moment_constant(self):
        a, b, n = 1.0, 0.5, 30
        cov = g.GaussianCovSpec(a, b, n).covariance()
        assert bd.gaussian_moment_M(a, b, n) == pytest.approx(b * b * cov[1, 1], rel=1e-12)


class TestReports:
    def test_gaussian_reports(self):
        reps = bd.gaussian_bound_reports(1.0, 0.25, 50, 3)
        names = {r.name for r in reps}
        assert {"thm_main_fisher", "cor_convex_fisher", "cor_convex_kl", "cor_convex_w2sq",
                "cor_convex_rev_kl", "subadditivity_kl"} <= names
        assert all(r.satisfied for r in reps)

    def test_inapplicable_recorded(self):
        reps = bd.gaussian_bound_reports(1.0, 1.0, 50, 3)
        bad = [r for r in reps if not r.applicable]
        assert [r.name for r in bad] == ["cor_convex_fisher", "cor_convex_kl", "cor_convex_w2sq"]
        assert all(r.satisfied is None and "reason" in r.params for r in bad)

    def test_csv(self, tmp_path):
        path = tmp_path / "b.csv"
        reps = bd.gaussian_bound_reports(1.0, 0.25, 20, 2)
        bd.write_bound_reports(reps, path)
        bd.write_bound_reports(reps[:1], path, append=True)
        rows = list(csv.DictReader(path.open()))
        assert len(rows) == len(reps) + 1
        assert set(rows[0]) == set(bd.BOUND_FIELDS)
        assert rows[0]["satisfied"] == "true"
        json.loads(rows[0]["params"])
