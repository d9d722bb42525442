import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from oracles import prox_grid_group, prox_grid_scalar

from mtclm.prox import group_soft_threshold, group_soft_threshold_rows, soft_threshold

vec = arrays(np.float64, st.integers(1, 8), elements=st.floats(-50, 50))
xi = st.floats(0, 20)


def test_soft_threshold_examples():
    assert soft_threshold(np.array([2.0]), 0.5).tolist() == [1.5]
    assert soft_threshold(np.array([-0.3]), 0.5).tolist() == [0.0]
    z = np.array([1.0, -2.0, 0.0])
    np.testing.assert_array_equal(soft_threshold(z, 0.0), z)


def test_group_soft_threshold_examples():
    np.testing.assert_allclose(group_soft_threshold(np.array([3.0, 4.0]), 2.5), [1.5, 2.0])
    assert group_soft_threshold(np.array([3.0, 4.0]), 6.0).tolist() == [0.0, 0.0]
    assert group_soft_threshold(np.array([0.0, 0.0]), 1.0).tolist() == [0.0, 0.0]


def test_negative_threshold_rejected():
    with pytest.raises(ValueError):
        soft_threshold(np.ones(2), -1.0)
    with pytest.raises(ValueError):
        group_soft_threshold(np.ones(2), -1.0)


@given(vec, xi)
def test_soft_threshold_shrinks(z, t):
    out = soft_threshold(z, t)
    assert np.max(np.abs(out)) <= np.max(np.abs(z))
    assert np.all(out * z >= 0)


@given(st.integers(1, 8).flatmap(lambda n: st.tuples(
    arrays(np.float64, n, elements=st.floats(-50, 50)),
    arrays(np.float64, n, elements=st.floats(-50, 50)))), xi)
def test_nonexpansive(pair, t):
    a, b = pair
    assert np.linalg.norm(soft_threshold(a, t) - soft_threshold(b, t)) <= np.linalg.norm(a - b) + 1e-12
    assert (np.linalg.norm(group_soft_threshold(a, t) - group_soft_threshold(b, t))
            <= np.linalg.norm(a - b) + 1e-12)


@given(vec, xi)
def test_group_output_is_nonnegative_multiple(z, t):
    out = group_soft_threshold(z, t)
    nz = np.linalg.norm(z)
    if nz == 0:
        assert np.all(out == 0)
    else:
        c = np.linalg.norm(out) / nz
        np.testing.assert_allclose(out, c * z, atol=1e-12)


@given(st.floats(-3, 3), st.floats(0, 2))
def test_soft_threshold_is_prox_by_grid_search(z, t):
    assert abs(soft_threshold(np.array([z]), t)[0] - prox_grid_scalar(z, t)) < 1e-4


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 3))
def test_group_threshold_is_prox_by_grid_search(z1, z2, t):
    z = np.array([z1, z2])
    grid_best, h = prox_grid_group(z, t)
    got = group_soft_threshold(z, t)

    def f(w):
        return 0.5 * np.sum((w - z) ** 2) + t * np.linalg.norm(w)

    # the closed form is at least as good as the best grid point, and close to it
    assert f(got) <= f(grid_best) + 1e-12
    assert np.linalg.norm(got - grid_best) < 2 * h + 1e-4


@given(arrays(np.float64, (5, 2), elements=st.floats(-10, 10)), xi)
def test_rowwise_matches_single(z, t):
    rows = group_soft_threshold_rows(z, t)
    for i in range(z.shape[0]):
        np.testing.assert_array_equal(rows[i], group_soft_threshold(z[i], t))
