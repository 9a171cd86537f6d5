import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plfsi.isotonic import project_monotone

from _oracles import isotonic_by_enumeration

finite_vec = st.lists(st.floats(-100, 100), min_size=1, max_size=20).map(np.array)


def test_already_monotone_unchanged():
    v = np.array([1.0, 1.0, 2.5, 7.0])
    assert np.array_equal(project_monotone(v), v)

def test_three_point_pooling():
    assert np.allclose(project_monotone([3, 1, 2]), [2, 2, 2], atol=1e-12)

def test_two_point_pooling():
    # minimizing (x-2)^2 + (x-1)^2 gives x = 1.5
    assert np.allclose(project_monotone([2, 1]), [1.5, 1.5], atol=1e-12)

def test_weighted_pooling():
    # weighted mean of the violating pair
    out = project_monotone([2.0, 1.0], weights=[1.0, 3.0])
    assert np.allclose(out, [1.25, 1.25], atol=1e-12)

def test_rejects_nan_inf():
    with pytest.raises(ValueError):
        project_monotone([1.0, np.nan])
    with pytest.raises(ValueError):
        project_monotone([1.0, np.inf])
    with pytest.raises(ValueError):
        project_monotone([1.0, 2.0], weights=[1.0, -1.0])


@given(finite_vec)
@settings(max_examples=100, deadline=None)
def test_idempotent(v):
    once = project_monotone(v)
    assert np.array_equal(project_monotone(once), once)

@given(finite_vec)
@settings(max_examples=100, deadline=None)
def test_mean_preserved_uniform_weights(v):
    assert project_monotone(v).mean() == pytest.approx(v.mean(), abs=1e-12 * max(1, abs(v).max()))

@given(st.data())
@settings(max_examples=60, deadline=None)
def test_lipschitz(data):
    n = data.draw(st.integers(1, 15))
    v = np.array(data.draw(st.lists(st.floats(-50, 50), min_size=n, max_size=n)))
    u = np.array(data.draw(st.lists(st.floats(-50, 50), min_size=n, max_size=n)))
    lhs = np.linalg.norm(project_monotone(v) - project_monotone(u))
    assert lhs <= np.linalg.norm(v - u) + 1e-9


@given(st.data())
@settings(max_examples=50, deadline=None)
def test_matches_enumeration_oracle_random(data):
    n = data.draw(st.integers(1, 7))
    v = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=n, max_size=n)))
    w = np.array(data.draw(st.lists(st.floats(0.1, 5), min_size=n, max_size=n)))
    assert np.allclose(
        project_monotone(v, w), isotonic_by_enumeration(v, w), atol=1e-8
    )


def test_matches_enumeration_oracle_integer_grid():
    # small slice of the exhaustive acceptance check
    import itertools

    for v in itertools.product([-2, -1, 0, 1, 2], repeat=4):
        got = project_monotone(np.array(v, dtype=float))
        want = isotonic_by_enumeration(np.array(v, dtype=float))
        assert np.allclose(got, want, atol=1e-8), v
