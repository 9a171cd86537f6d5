import numpy as np
import pytest

from plfsi.wls import RankDeficientError, SurveyGroups, WlsSolver, design_variance, fit_wls


def _random_problem(rng, n=40, d=3):
    X = np.column_stack([np.ones(n), rng.normal(size=(n, d - 1))])
    beta = rng.normal(size=d)
    y = X @ beta + rng.normal(scale=0.3, size=n)
    return X, y


class TestFitWls:
    def test_unit_weights_match_lstsq(self):
        rng = np.random.default_rng(0)
        X, y = _random_problem(rng)
        b = fit_wls(X, y, np.ones(len(y)))
        ref, *_ = np.linalg.lstsq(X, y, rcond=None)
        assert np.allclose(b, ref, atol=1e-10)

    def test_exact_interpolation(self):
        X = np.array([[1.0, 0.0], [1.0, 1.0]])
        y = np.array([2.0, 3.0])
        b = fit_wls(X, y, np.array([1.0, 5.0]))
        assert np.allclose(b, [2.0, 1.0], atol=1e-12)

    def test_integer_weights_equal_row_replication(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            X, y = _random_problem(rng, n=15)
            w = rng.integers(1, 5, size=15)
            b = fit_wls(X, y, w.astype(float))
            Xrep = np.repeat(X, w, axis=0)
            yrep = np.repeat(y, w)
            ref, *_ = np.linalg.lstsq(Xrep, yrep, rcond=None)
            assert np.allclose(b, ref, atol=1e-10)

    def test_residuals_weighted_orthogonal(self):
        rng = np.random.default_rng(2)
        X, y = _random_problem(rng)
        w = rng.uniform(0.5, 3.0, size=len(y))
        b = fit_wls(X, y, w)
        r = y - X @ b
        assert np.allclose(X.T @ (w * r), 0.0, atol=1e-9)

    def test_weight_scale_invariance(self):
        rng = np.random.default_rng(3)
        X, y = _random_problem(rng)
        w = rng.uniform(0.5, 3.0, size=len(y))
        assert np.allclose(fit_wls(X, y, w), fit_wls(X, y, 11.0 * w), atol=1e-11)

    def test_rank_deficiency_names_columns(self):
        X = np.column_stack([np.ones(10), np.arange(10.0), 2 * np.arange(10.0)])
        with pytest.raises(RankDeficientError, match="slope"):
            WlsSolver(X, np.ones(10), column_names=["const", "slope1", "slope2"])

    def test_multi_rhs_matches_column_loop(self):
        rng = np.random.default_rng(4)
        X, _ = _random_problem(rng)
        w = rng.uniform(0.5, 2.0, size=X.shape[0])
        Y = rng.normal(size=(X.shape[0], 5))
        solver = WlsSolver(X, w)
        B = solver.solve(Y)
        for j in range(5):
            assert np.allclose(B[:, j], solver.solve(Y[:, j]), atol=1e-12)

    def test_bad_weights(self):
        X = np.ones((4, 1))
        with pytest.raises(ValueError):
            fit_wls(X, np.zeros(4), np.array([1.0, 0.0, 1.0, 1.0]))
        with pytest.raises(ValueError):
            fit_wls(X, np.zeros(4), np.array([1.0, np.nan, 1.0, 1.0]))


class TestDesignVariance:
    def test_matches_hc0_under_srs(self):
        # one stratum, every subject its own PSU, unit weights: the sandwich
        # collapses to HC0 scaled by n/(n-1)
        rng = np.random.default_rng(5)
        X, y = _random_problem(rng, n=60)
        n = 60
        w = np.ones(n)
        b = fit_wls(X, y, w)
        strata = np.zeros(n, dtype=int)
        psus = np.arange(n)
        cov = design_variance(X, y, w, strata, psus, b)
        r = y - X @ b
        bread = np.linalg.inv(X.T @ X)
        hc0 = bread @ (X.T * r**2) @ X @ bread
        assert np.allclose(cov, hc0 * n / (n - 1), atol=1e-12)

    def test_brute_force_psu_oracle(self):
        # recompute the meat longhand, stratum by stratum and PSU by PSU
        rng = np.random.default_rng(6)
        n = 36
        X, y = _random_problem(rng, n=n)
        w = rng.uniform(0.5, 2.0, size=n)
        strata = rng.integers(0, 3, size=n)
        psus = rng.integers(0, 4, size=n)
        # guarantee two PSUs per stratum
        strata[:6] = [0, 0, 1, 1, 2, 2]
        psus[:6] = [0, 1, 0, 1, 0, 1]
        b = fit_wls(X, y, w)
        cov = design_variance(X, y, w, strata, psus, b)

        r = y - X @ b
        scores = X * (w * r)[:, None]
        meat = np.zeros((X.shape[1],) * 2)
        for h in np.unique(strata):
            totals = []
            in_h = strata == h
            for c in np.unique(psus[in_h]):
                totals.append(scores[in_h & (psus == c)].sum(axis=0))
            T = np.array(totals)
            dev = T - T.mean(axis=0)
            meat += (len(T) / (len(T) - 1)) * dev.T @ dev
        bread = np.linalg.inv((X * w[:, None]).T @ X)
        ref = bread @ meat @ bread
        assert np.allclose(cov, ref, atol=1e-12)

    def test_zero_residual_zero_covariance(self):
        X = np.column_stack([np.ones(8), np.arange(8.0)])
        b = np.array([1.0, 2.0])
        y = X @ b
        cov = design_variance(
            X, y, np.ones(8), np.zeros(8), np.arange(8), b
        )
        assert np.allclose(cov, 0.0, atol=1e-14)

    def test_relabel_invariance(self):
        rng = np.random.default_rng(7)
        n = 30
        X, y = _random_problem(rng, n=n)
        w = np.ones(n)
        strata = np.repeat([0, 1, 2], 10)
        psus = np.tile([0, 1], 15)
        b = fit_wls(X, y, w)
        a = design_variance(X, y, w, strata, psus, b)
        relabeled = design_variance(
            X, y, w,
            np.array([f"site-{s}" for s in strata]),
            np.array([f"unit_{p + 99}" for p in psus]),
            b,
        )
        assert np.allclose(a, relabeled, atol=1e-15)

    def test_singleton_psu_stratum_rejected(self):
        X = np.ones((4, 1))
        y = np.arange(4.0)
        strata = np.array([0, 0, 1, 1])
        psus = np.array([0, 1, 0, 0])
        b = fit_wls(X, y, np.ones(4))
        with pytest.raises(ValueError, match="collapse"):
            design_variance(X, y, np.ones(4), strata, psus, b)


def test_survey_groups_pair_counting():
    g = SurveyGroups(["a", "a", "b", "b", "a"], ["1", "2", "1", "2", "1"])
    assert g.n_pairs == 4
