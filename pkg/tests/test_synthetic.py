import numpy as np
import pytest

from plfsi.metrics import frechet_r2
from plfsi.model import FitConfig, fit_plsi, fitted_values
from plfsi.synthetic import LINKS, SynthConfig, Truth, generate


class TestGenerate:
    def test_seed_determinism(self):
        a, _ = generate(SynthConfig(n=30, seed=5))
        b, _ = generate(SynthConfig(n=30, seed=5))
        for ra, rb in zip(a, b):
            assert np.array_equal(ra.response.values, rb.response.values)
            assert np.array_equal(ra.x, rb.x)
            assert np.array_equal(ra.z, rb.z)
            assert ra.weight == rb.weight

    def test_different_seeds_differ(self):
        a, _ = generate(SynthConfig(n=30, seed=5))
        b, _ = generate(SynthConfig(n=30, seed=6))
        assert not np.array_equal(a[0].response.values, b[0].response.values)

    def test_responses_valid_quantile_functions(self):
        records, _ = generate(SynthConfig(n=50, noise_sd=1.5, seed=1))
        for r in records:
            assert np.all(np.diff(r.response.values) >= 0)
            assert np.all(np.isfinite(r.response.values))

    def test_noiseless_matches_truth_surface(self):
        records, truth = generate(SynthConfig(n=20, noise_sd=0.0, seed=2))
        grid = records[0].response.grid
        for r in records:
            expected = truth.surface(r.x, r.z, grid)
            assert np.allclose(r.response.values, expected, atol=1e-12)

    def test_covariates_clipped(self):
        records, _ = generate(SynthConfig(n=500, seed=3, clip=1.5))
        X = np.vstack([r.x for r in records])
        Z = np.vstack([r.z for r in records])
        assert np.abs(X).max() <= 1.5 and np.abs(Z).max() <= 1.5

    def test_informative_weights_normalized(self):
        records, _ = generate(SynthConfig(n=100, weight_scheme="informative", seed=4))
        w = np.array([r.weight for r in records])
        assert w.sum() == pytest.approx(100, rel=1e-12)
        assert w.std() > 0

    def test_strata_and_psus(self):
        records, _ = generate(
            SynthConfig(n=60, n_strata=3, psus_per_stratum=4, seed=5)
        )
        strata = {r.stratum for r in records}
        assert strata <= {"h0", "h1", "h2"}
        for r in records:
            assert r.psu.startswith(r.stratum + "_")

    def test_config_errors(self):
        with pytest.raises(ValueError, match="link"):
            generate(SynthConfig(link="cubic"))
        with pytest.raises(ValueError, match="weight scheme"):
            generate(SynthConfig(weight_scheme="exotic"))
        with pytest.raises(ValueError, match="noise_sd"):
            generate(SynthConfig(noise_sd=-0.1))
        with pytest.raises(ValueError, match="theta0"):
            generate(SynthConfig(p_x=2, theta0=(1.0, 0.0, 0.0)))
        with pytest.raises(ValueError, match="slope"):
            generate(SynthConfig(b=(8.0, -8.0)))

    def test_links(self):
        u = np.array([-2.0, 0.0, 2.0])
        assert np.allclose(LINKS["identity"](u), u)
        assert np.allclose(LINKS["flat"](u), 0.0)
        ramp = LINKS["sigmoid-ramp"](u)
        assert ramp[0] < ramp[1] < ramp[2]
        assert LINKS["sigmoid-ramp"](0.0) == pytest.approx(2.0)


class TestTruth:
    def test_surface_formula(self):
        _, truth = generate(SynthConfig(n=5, seed=6))
        from plfsi.quantiles import ProbabilityGrid

        grid = ProbabilityGrid.equidistant(11)
        x = np.array([0.5, -0.5])
        z = np.array([1.0, 1.0])
        s = truth.surface(x, z, grid)
        u = float(truth.theta0 @ x)
        slope = truth.alpha0[1] + float(z @ truth.b) + 4.0 / (1.0 + np.exp(-8.0 * u))
        assert np.allclose(s, truth.alpha0[0] + slope * grid.points, atol=1e-12)

    def test_round_trips_through_dict(self):
        _, truth = generate(SynthConfig(n=5, seed=7))
        d = truth.to_dict()
        assert d["theta0"] == list(truth.theta0)
        assert d["link"] == "sigmoid-ramp"


def test_zero_noise_linear_link_is_fit_exactly():
    # a linear link lies inside the spline space for the true direction, so
    # a noiseless dataset should be explained almost perfectly
    records, _ = generate(SynthConfig(n=150, link="identity", noise_sd=0.0, seed=8))
    fit, _ = fit_plsi(records, FitConfig(compute_bands=False))
    r2 = frechet_r2(records, fitted_values(fit, records))
    assert r2 > 1 - 1e-6


def test_zero_noise_sigmoid_link_nearly_explained():
    # the steep sigmoid is only approximated by the spline, so demand a high
    # but not exact fit
    records, _ = generate(SynthConfig(n=150, noise_sd=0.0, seed=8))
    fit, _ = fit_plsi(records, FitConfig(compute_bands=False))
    r2 = frechet_r2(records, fitted_values(fit, records))
    assert r2 > 0.99
