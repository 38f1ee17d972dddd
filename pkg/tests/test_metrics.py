import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from elmcast.metrics import error_metrics, gain, normalized_mutual_information, pearson_matrix
from oracles import histogram_mi_norm


def test_perfect_forecast():
    m = error_metrics([1.0, 4.0, 2.0], [1.0, 4.0, 2.0])
    assert (m.rmse, m.mae, m.mbe, m.r2) == (0.0, 0.0, 0.0, 1.0)


def test_hand_example():
    # SS_res = 1 + 0 + 1 = 2, SS_tot = 1 + 0 + 1 = 2, mean 2
    m = error_metrics([1.0, 2.0, 3.0], [2.0, 2.0, 2.0])
    assert m.mae == 2 / 3
    assert m.rmse == math.sqrt(2 / 3)
    assert m.mbe == 0.0
    assert m.r2 == 0.0
    assert m.nmae == pytest.approx(1 / 3, abs=1e-15)
    assert m.mean_observed == 2.0 and m.n_points == 3


def test_overestimation_is_positive():
    m = error_metrics([1.0, 1.0], [2.0, 2.0])
    assert m.mbe == 1.0 and m.nmbe == 1.0


def test_undefined_cases():
    m = error_metrics([1.0, -1.0], [0.0, 0.0])
    assert math.isnan(m.nrmse) and math.isnan(m.nmae) and math.isnan(m.nmbe)
    assert m.rmse == 1.0
    m = error_metrics([3.0, 3.0], [2.0, 4.0])
    assert math.isnan(m.r2)
    with pytest.raises(ValueError):
        error_metrics([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        error_metrics([], [])


def test_gain_examples():
    assert gain(0.50, 0.45) == pytest.approx(0.1, abs=1e-15)
    assert gain(0.3, 0.3) == 0.0
    assert gain(0.3, 0.4) < 0
    assert math.isnan(gain(0.0, 0.1))


@given(st.floats(1e-6, 1e6), st.floats(-10, 0.999))
def test_gain_inverse(a, g):
    assert gain(a, a * (1 - g)) == pytest.approx(g, abs=1e-9)


pairs = st.integers(1, 40).flatmap(lambda n: st.tuples(
    arrays(np.float64, n, elements=st.floats(-1e4, 1e4)),
    arrays(np.float64, n, elements=st.floats(-1e4, 1e4)),
    st.permutations(list(range(n))),
))


@settings(max_examples=200, deadline=None)
@given(pairs)
def test_metric_chain_and_order_invariance(data):
    y, p, perm = data
    m = error_metrics(y, p)
    tol = 1e-9 * (1.0 + m.rmse)
    assert m.rmse + tol >= m.mae >= abs(m.mbe) - tol
    assert math.isnan(m.r2) or m.r2 <= 1.0
    perm = np.array(perm)
    q = error_metrics(y[perm], p[perm])
    for a, b in zip(m.as_dict().values(), q.as_dict().values()):
        assert (math.isnan(a) and math.isnan(b)) or a == pytest.approx(b, rel=1e-12, abs=1e-9)


def test_mi_identity():
    x = np.random.default_rng(0).normal(size=2000)
    assert abs(normalized_mutual_information(x, x, 32) - 1.0) <= 1e-9


def test_mi_independent():
    rng = np.random.default_rng(1)
    x, y = rng.uniform(size=10_000), rng.uniform(size=10_000)
    assert normalized_mutual_information(x, y, 32) < 0.05


def test_mi_affine_bijection():
    x = np.random.default_rng(2).normal(size=10_000)
    assert normalized_mutual_information(x, 2 * x + 1, 32) > 0.9


@pytest.mark.parametrize("seed", range(4))
def test_mi_matches_loop_oracle(seed):
    rng = np.random.default_rng(seed)
    x = rng.gamma(2.0, size=800)
    y = np.sin(x) + 0.3 * rng.normal(size=800)
    got = normalized_mutual_information(x, y, 12)
    assert got == pytest.approx(histogram_mi_norm(x.tolist(), y.tolist(), 12), abs=1e-12)


def test_mi_constant_is_undefined():
    assert math.isnan(normalized_mutual_information(np.ones(100), np.arange(100.0), 8))


def test_mi_preconditions():
    with pytest.raises(ValueError):
        normalized_mutual_information(np.arange(10.0), np.arange(10.0), 8)
    with pytest.raises(ValueError):
        normalized_mutual_information(np.arange(10.0), np.arange(10.0), 1)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 20), st.floats(0, 3))
def test_mi_bounds_and_symmetry(seed, bins, coupling):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=200)
    y = coupling * x + rng.normal(size=200)
    a = normalized_mutual_information(x, y, bins)
    b = normalized_mutual_information(y, x, bins)
    assert 0.0 <= a <= 1.0
    assert abs(a - b) <= 1e-12


def test_pearson_matrix():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(100, 3))
    a[:, 2] = a[:, 0]
    r = pearson_matrix(a)
    np.testing.assert_allclose(np.diag(r), 1.0, atol=1e-12)
    assert r[0, 2] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(r, np.corrcoef(a.T), atol=1e-12)
