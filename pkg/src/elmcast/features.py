"""Supervised design matrices from the filled hourly table."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DimensionError, InsufficientDataError, ScalerStateError, SplitError
from .ingest import CHANNELS, RawSeriesTable

DAY_HOURS = 24


class CyclicEncoding(NamedTuple):
    sin: float
    cos: float
    period: float


def encode_cyclic_time(hour_of_day, period=DAY_HOURS):
    """Map hour-of-day to its (sin, cos) phase on a cycle of ``period`` hours.

    Accepts a scalar (returns :class:`CyclicEncoding`) or an array (returns a
    ``(n, 2)`` array of sin/cos columns).
    """
    if not period > 0:
        raise ValueError(f"period must be positive, got {period}")
    phase = 2.0 * np.pi * np.asarray(hour_of_day, dtype=np.float64) / period
    if phase.ndim == 0:
        return CyclicEncoding(float(np.sin(phase)), float(np.cos(phase)), float(period))
    return np.column_stack((np.sin(phase), np.cos(phase)))


def hour_of_day(epoch_hours):
    return np.mod(np.asarray(epoch_hours, dtype=np.int64), DAY_HOURS)


@dataclass(frozen=True)
class WindowedDataset:
    """Rows of lagged inputs and h-step-ahead targets.

    Row ``i`` uses series indices ``i .. i+w-1`` as lags and targets index
    ``i + w - 1 + h``. The feature layout is channel-major lag blocks
    (oldest lag first) followed by sin and cos of the target hour.
    """

    features: np.ndarray
    targets: np.ndarray
    window: int
    horizon: int
    channels: tuple  # input channel indices, in block order
    target_channels: tuple
    origin_index: np.ndarray  # series index of the last lag (forecast issue time)
    origin_timestamps: np.ndarray
    target_timestamps: np.ndarray

    def __len__(self):
        return self.features.shape[0]

    @property
    def target_index(self):
        return self.origin_index + self.horizon

    @property
    def feature_width(self):
        return self.features.shape[1]

    def take(self, rows: slice) -> "WindowedDataset":
        return replace(
            self,
            features=self.features[rows],
            targets=self.targets[rows],
            origin_index=self.origin_index[rows],
            origin_timestamps=self.origin_timestamps[rows],
            target_timestamps=self.target_timestamps[rows],
        )


def mode_channels(mode, channel=None):
    """(input channels, target channels) for ``"mimo"`` or ``"siso"``."""
    mode = mode.lower()
    if mode == "mimo":
        all_ch = tuple(range(len(CHANNELS)))
        return all_ch, all_ch
    if mode == "siso":
        if isinstance(channel, str):
            channel = CHANNELS.index(channel)
        if channel is None or not 0 <= channel < len(CHANNELS):
            raise ValueError(f"SISO mode needs a channel index in 0..6, got {channel!r}")
        return (channel,), (channel,)
    raise ValueError(f"unknown mode {mode!r}")


def build_supervised_windows(table: RawSeriesTable, w, h, mode="mimo", channel=None,
                             scaler: "ScalerParams | None" = None) -> WindowedDataset:
    """Slide a ``w``-hour window over ``table`` to forecast ``h`` hours ahead.

    MIMO rows hold ``7*w + 2`` features and 7 targets; SISO rows hold the
    ``w`` lags of one channel plus the 2 time features and a single target.
    When ``scaler`` is given, channel values are min-max scaled before
    windowing (targets included); the time features are never scaled.
    """
    if w < 1 or h < 1:
        raise ValueError(f"window and horizon must be >= 1 (got w={w}, h={h})")
    inputs, outputs = mode_channels(mode, channel)
    L = len(table)
    n = L - w - h + 1
    if n < 1:
        raise InsufficientDataError(f"series of length {L} too short for w={w}, h={h}")
    values = np.ascontiguousarray(table.values, dtype=np.float64)
    if np.isnan(values).any():
        raise ValueError("table still contains missing values; run fill_gaps first")
    if scaler is not None:
        values = scaler.forward(values)

    features = np.empty((n, len(inputs) * w + 2), dtype=np.float64)
    kernels.lag_windows(values, w, n, np.asarray(inputs, dtype=np.intp), features)
    origin = np.arange(n, dtype=np.int64) + (w - 1)
    target_idx = origin + h
    features[:, -2:] = encode_cyclic_time(hour_of_day(table.timestamps[target_idx]))
    targets = values[np.ix_(target_idx, outputs)]
    return WindowedDataset(
        features=features,
        targets=targets,
        window=w,
        horizon=h,
        channels=inputs,
        target_channels=outputs,
        origin_index=origin,
        origin_timestamps=table.timestamps[origin],
        target_timestamps=table.timestamps[target_idx],
    )


def forecast_features(table: RawSeriesTable, w, h, mode="mimo", channel=None,
                      scaler: "ScalerParams | None" = None):
    """Feature rows for every complete window, including ones whose target lies
    past the end of ``table``.

    Returns ``(features, origin_timestamps, target_timestamps)``.
    """
    inputs, _ = mode_channels(mode, channel)
    L = len(table)
    n = L - w + 1
    if w < 1 or h < 1:
        raise ValueError(f"window and horizon must be >= 1 (got w={w}, h={h})")
    if n < 1:
        raise InsufficientDataError(f"series of length {L} shorter than window {w}")
    values = np.ascontiguousarray(table.values, dtype=np.float64)
    if np.isnan(values).any():
        raise ValueError("table still contains missing values; run fill_gaps first")
    if scaler is not None:
        values = scaler.forward(values)
    features = np.empty((n, len(inputs) * w + 2), dtype=np.float64)
    kernels.lag_windows(values, w, n, np.asarray(inputs, dtype=np.intp), features)
    origin_ts = table.timestamps[w - 1:]
    target_ts = origin_ts + h
    features[:, -2:] = encode_cyclic_time(hour_of_day(target_ts))
    return features, origin_ts, target_ts


def split_point(n, train_fraction):
    if not 0.0 < train_fraction < 1.0:
        raise SplitError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n_train = int(np.floor(n * train_fraction))
    if n_train < 1 or n_train >= n:
        raise SplitError(f"splitting {n} rows at {train_fraction} leaves an empty side")
    return n_train


def chronological_split(dataset: WindowedDataset, train_fraction=0.8):
    """First ``floor(n * train_fraction)`` rows train, the rest test. No shuffling."""
    k = split_point(len(dataset), train_fraction)
    return dataset.take(slice(0, k)), dataset.take(slice(k, None))


@dataclass(frozen=True)
class ScalerParams:
    """Per-column min-max parameters. Constant columns use a unit range.

    A range below the smallest normal double also counts as constant, since
    dividing by it overflows.
    """

    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def span(self):
        span = self.maximum - self.minimum
        return np.where(span >= np.finfo(np.float64).tiny, span, 1.0)

    def subset(self, columns) -> "ScalerParams":
        columns = list(columns)
        return ScalerParams(self.minimum[columns], self.maximum[columns])

    def forward(self, x):
        return scale(self, x, "forward")

    def inverse(self, x):
        return scale(self, x, "inverse")


def fit_scaler(train_rows) -> ScalerParams:
    x = np.asarray(train_rows, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise ValueError("cannot fit a scaler on zero rows")
    return ScalerParams(x.min(axis=0), x.max(axis=0))


def fit_series_scaler(table: RawSeriesTable, w, h, train_fraction=0.8) -> ScalerParams:
    """Per-channel scaler fitted on the series prefix seen by training rows only.

    Training rows of the (w, h) windowing touch indices ``0 .. k-1+w-1+h``
    where ``k`` is the number of training rows; nothing later is used.
    """
    n = len(table) - w - h + 1
    if n < 1:
        raise InsufficientDataError(f"series of length {len(table)} too short for w={w}, h={h}")
    k = split_point(n, train_fraction)
    last = (k - 1) + (w - 1) + h
    return fit_scaler(table.values[: last + 1])


def scale(params: ScalerParams | None, x, direction="forward"):
    """Apply (``forward``) or undo (``inverse``) the min-max map column-wise."""
    if params is None:
        raise ScalerStateError("scaler has not been fitted")
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    if x.shape[1] != params.minimum.shape[0]:
        raise DimensionError(
            f"matrix has {x.shape[1]} columns, scaler has {params.minimum.shape[0]}"
        )
    if direction == "forward":
        out = (x - params.minimum) / params.span
    elif direction == "inverse":
        out = x * params.span + params.minimum
    else:
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    return out[:, 0] if squeeze else out
