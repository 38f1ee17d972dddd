import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from elmcast.errors import DimensionError, InsufficientDataError, ScalerStateError, SplitError
from elmcast.features import (
    ScalerParams,
    build_supervised_windows,
    chronological_split,
    encode_cyclic_time,
    fit_scaler,
    fit_series_scaler,
    forecast_features,
    scale,
)
from elmcast.ingest import RawSeriesTable


def index_table(L, start=0):
    """Every cell holds 1000*channel + its own row index, so leaks are visible."""
    vals = np.arange(L, dtype=float)[:, None] + 1000.0 * np.arange(7)
    return RawSeriesTable(start + np.arange(L), vals, np.zeros((L, 7), bool))


@pytest.mark.parametrize("t, expected", [(0, (0.0, 1.0)), (6, (1.0, 0.0)), (12, (0.0, -1.0))])
def test_encode_examples(t, expected):
    enc = encode_cyclic_time(t, 24)
    assert enc.sin == pytest.approx(expected[0], abs=1e-15)
    assert enc.cos == pytest.approx(expected[1], abs=1e-15)
    assert enc.period == 24


def test_encode_bad_period():
    with pytest.raises(ValueError):
        encode_cyclic_time(3, 0)
    with pytest.raises(ValueError):
        encode_cyclic_time(3, -24)


@given(st.integers(0, 23), st.sampled_from([24, 12, 8.5, 168]))
def test_encode_unit_circle_and_period(t, T):
    s, c, _ = encode_cyclic_time(t, T)
    assert abs(s * s + c * c - 1.0) <= 1e-12
    s2, c2, _ = encode_cyclic_time(t + T, T)
    assert abs(s - s2) <= 1e-12 and abs(c - c2) <= 1e-12


def test_window_shapes_mimo():
    ds = build_supervised_windows(index_table(100), 48, 1, "mimo")
    assert ds.features.shape == (52, 338)
    assert ds.targets.shape == (52, 7)


def test_window_boundaries():
    assert len(build_supervised_windows(index_table(49), 48, 1)) == 1
    with pytest.raises(InsufficientDataError):
        build_supervised_windows(index_table(48), 48, 1)


def test_window_layout():
    w, h = 4, 3
    ds = build_supervised_windows(index_table(20, start=5), w, h)
    i = 2
    row = ds.features[i]
    # channel-major blocks, oldest lag first
    for c in range(7):
        np.testing.assert_array_equal(row[c * w:(c + 1) * w], 1000.0 * c + np.arange(i, i + w))
    target_index = i + w - 1 + h
    np.testing.assert_array_equal(ds.targets[i], 1000.0 * np.arange(7) + target_index)
    hour = (5 + target_index) % 24
    np.testing.assert_allclose(row[-2:], [np.sin(2 * np.pi * hour / 24), np.cos(2 * np.pi * hour / 24)])
    assert ds.origin_timestamps[i] == 5 + i + w - 1
    assert ds.target_timestamps[i] == 5 + target_index


def test_window_siso():
    ds = build_supervised_windows(index_table(60), 10, 2, "siso", channel="solar")
    assert ds.features.shape == (49, 12)
    assert ds.targets.shape == (49, 1)
    np.testing.assert_array_equal(ds.features[0, :10], 3000.0 + np.arange(10))
    np.testing.assert_array_equal(ds.targets[:, 0], 3000.0 + ds.target_index)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 30), st.sampled_from(["mimo", "siso"]))
def test_no_leakage(w, h, extra, mode):
    L = w + h + extra
    ds = build_supervised_windows(index_table(L), w, h, mode, channel=0)
    assert len(ds) == L - w - h + 1
    lags = ds.features[:, :-2] % 1000.0  # each lag value is its own series index
    target_idx = ds.targets[:, :1] % 1000.0
    assert (lags < target_idx).all()
    np.testing.assert_array_equal(ds.target_index, np.arange(len(ds)) + w - 1 + h)


@pytest.mark.parametrize("n, frac, n_train", [(100, 0.8, 80), (5, 0.8, 4)])
def test_split_sizes(n, frac, n_train):
    L = n + 2
    ds = build_supervised_windows(index_table(L), 2, 1)
    assert len(ds) == n
    tr, te = chronological_split(ds, frac)
    assert len(tr) == n_train and len(te) == n - n_train
    assert tr.origin_timestamps.max() < te.origin_timestamps.min()
    np.testing.assert_array_equal(np.concatenate([tr.features, te.features]), ds.features)


def test_split_errors():
    ds = build_supervised_windows(index_table(10), 2, 1)
    with pytest.raises(SplitError):
        chronological_split(ds, 1.0)
    with pytest.raises(SplitError):
        chronological_split(ds, 0.05)
    one = build_supervised_windows(index_table(3), 2, 1)
    with pytest.raises(SplitError):
        chronological_split(one, 0.5)


def test_scaler_examples():
    p = fit_scaler(np.array([[0.0], [5.0], [10.0]]))
    np.testing.assert_array_equal(scale(p, [0.0, 5.0, 10.0]), [0.0, 0.5, 1.0])
    c = fit_scaler([7.0, 7.0, 7.0])
    np.testing.assert_array_equal(scale(c, [7.0, 7.0, 7.0]), [0.0, 0.0, 0.0])
    np.testing.assert_array_equal(scale(c, [0.0, 0.0, 0.0], "inverse"), [7.0, 7.0, 7.0])


def test_scaler_state_errors():
    with pytest.raises(ScalerStateError):
        scale(None, [1.0], "inverse")
    p = ScalerParams(np.zeros(2), np.ones(2))
    with pytest.raises(DimensionError):
        scale(p, np.ones((3, 3)))


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (12, 3), elements=st.floats(-1e6, 1e6)),
       arrays(np.float64, (5, 3), elements=st.floats(-1e7, 1e7)))
def test_scaler_roundtrip(train, other):
    p = fit_scaler(train)
    assert (p.maximum >= p.minimum).all()
    for x in (train, other):
        back = scale(p, scale(p, x, "forward"), "inverse")
        # relative to the magnitude of the affine map: values far below it are absorbed
        mag = max(np.abs(x).max(), np.abs(p.minimum).max(), p.span.max())
        np.testing.assert_allclose(back, x, rtol=1e-10, atol=1e-10 * mag)
    fwd = scale(p, train)
    assert fwd.min() >= 0.0 and fwd.max() <= 1.0 + 1e-15


def test_test_rows_may_leave_unit_interval():
    p = fit_scaler(np.array([[0.0], [1.0]]))
    out = scale(p, np.array([[-1.0], [3.0]]))
    np.testing.assert_array_equal(out[:, 0], [-1.0, 3.0])


def test_series_scaler_uses_training_prefix_only():
    t = index_table(100)
    w, h = 5, 2
    p = fit_series_scaler(t, w, h, 0.8)
    n = 100 - w - h + 1
    k = int(n * 0.8)
    last = (k - 1) + (w - 1) + h
    np.testing.assert_array_equal(p.maximum, 1000.0 * np.arange(7) + last)
    ds = build_supervised_windows(t, w, h)
    tr, _ = chronological_split(ds, 0.8)
    assert tr.target_index.max() == last


def test_forecast_features_extend_past_end():
    t = index_table(30)
    X, origin, target = forecast_features(t, 5, 3)
    assert X.shape == (26, 37)
    assert origin[-1] == 29 and target[-1] == 32
    ds = build_supervised_windows(t, 5, 3)
    np.testing.assert_array_equal(X[:len(ds)], ds.features)


def test_subnormal_range_treated_as_constant():
    p = fit_scaler(np.array([[0.0], [2.2e-313]]))
    assert p.span[0] == 1.0
    out = scale(p, np.array([[1.0]]))
    assert np.isfinite(out).all()
    np.testing.assert_array_equal(scale(p, out, "inverse"), [[1.0]])
