import numpy as np
import pytest

from plfsi.splines import (
    SplineConfig,
    eval_basis,
    eval_basis_derivative,
    eval_basis_matrix,
    make_knots,
)

from _oracles import cox_de_boor, sorted_percentile

UNIFORM = SplineConfig(order=4, interior_knots=np.linspace(1, 5, 5) / 6, boundary=(0.0, 1.0))


class TestMakeKnots:
    def test_equidistant_values_default_percentiles(self):
        values = np.linspace(0, 1, 601)
        cfg = make_knots(values, K=5, s=4)
        assert np.allclose(cfg.interior_knots, [1 / 6, 2 / 6, 3 / 6, 4 / 6, 5 / 6], atol=1 / 600)
        assert cfg.boundary == (0.0, 1.0)
        assert cfg.basis_dim == 9

    def test_single_knot_is_median(self):
        values = np.array([1.0, 2.0, 3.0, 10.0, 20.0])
        cfg = make_knots(values, K=1, s=2)
        assert cfg.interior_knots[0] == pytest.approx(3.0)

    def test_duplicates_match_order_statistic_oracle(self):
        rng = np.random.default_rng(3)
        values = rng.integers(0, 8, size=57).astype(float)
        cfg = make_knots(values, K=3, s=4)
        for j, knot in enumerate(cfg.interior_knots, start=1):
            assert knot == pytest.approx(sorted_percentile(values, j / 4), abs=1e-12)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(0)
        values = rng.normal(size=80)
        a = make_knots(values, K=5, s=4)
        b = make_knots(rng.permutation(values), K=5, s=4)
        assert np.array_equal(a.interior_knots, b.interior_knots)
        assert a.boundary == b.boundary

    def test_too_few_distinct(self):
        with pytest.raises(ValueError, match="distinct"):
            make_knots([1.0, 2.0, 1.0, 2.0], K=5, s=4)


class TestEvalBasis:
    def test_partition_of_unity(self):
        u = np.linspace(0, 1, 37)
        M = eval_basis_matrix(u, UNIFORM)
        assert np.all(M >= 0)
        assert np.allclose(M.sum(axis=1), 1.0, atol=1e-12)

    def test_left_boundary(self):
        b = eval_basis(0.0, UNIFORM)
        assert b[0] == 1.0 and np.all(b[1:] == 0.0)

    def test_clamping(self):
        assert np.array_equal(eval_basis(-10.0, UNIFORM), eval_basis(0.0, UNIFORM))
        assert np.array_equal(eval_basis(10.0, UNIFORM), eval_basis(1.0, UNIFORM))

    def test_matches_cox_de_boor_recursion(self):
        cfg = UNIFORM
        t = cfg.knot_vector
        # midway between interior knots, plus a few other interior points
        for u in [1 / 12, 3 / 12, 7 / 12, 0.99, 0.5]:
            mine = eval_basis(u, cfg)
            ref = [cox_de_boor(t, j, cfg.order - 1, u) for j in range(cfg.basis_dim)]
            assert np.allclose(mine, ref, atol=1e-12), u

    def test_local_support(self):
        for u in np.linspace(0.01, 0.99, 23):
            b = eval_basis(u, UNIFORM)
            assert np.sum(b > 0) <= UNIFORM.order

    def test_reproduces_constants(self):
        u = np.linspace(0, 1, 11)
        M = eval_basis_matrix(u, UNIFORM)
        assert np.allclose(M @ np.ones(UNIFORM.basis_dim), 1.0, atol=1e-12)

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            eval_basis(np.nan, UNIFORM)


class TestEvalBasisDerivative:
    def test_sums_to_zero(self):
        for u in np.linspace(0, 1, 17):
            assert abs(eval_basis_derivative(u, UNIFORM).sum()) < 1e-10

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        h = 1e-6
        for u in rng.uniform(0.01, 0.99, size=100):
            fd = (eval_basis(u + h, UNIFORM) - eval_basis(u - h, UNIFORM)) / (2 * h)
            assert np.allclose(eval_basis_derivative(u, UNIFORM), fd, atol=1e-5)

    def test_linear_spline_hat_slopes(self):
        cfg = SplineConfig(order=2, interior_knots=np.array([0.5]), boundary=(0.0, 1.0))
        d = eval_basis_derivative(0.25, cfg)
        # hat functions on knots {0, 0.5, 1}: slopes -1/0.5 and +1/0.5
        assert np.allclose(d, [-2.0, 2.0, 0.0], atol=1e-10)
        d = eval_basis_derivative(0.75, cfg)
        assert np.allclose(d, [0.0, -2.0, 2.0], atol=1e-10)
