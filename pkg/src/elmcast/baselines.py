"""Naive persistence forecast, the reference for the Gain score."""
import numpy as np

from .errors import AlignmentError


def persistence_forecast(series, h, target_indices=None):
    """Persistence predictions ``y[t]`` for targets ``y[t + h]``.

    ``target_indices`` are the series indices being forecast (the test-row
    target instants); by default every index from ``h`` to the end. Returns
    ``(predictions, targets)`` as copies of series values.
    """
    y = np.asarray(series)
    if h < 0:
        raise AlignmentError(f"horizon must be non-negative, got {h}")
    if target_indices is None:
        target_indices = np.arange(h, y.shape[0])
    idx = np.asarray(target_indices, dtype=np.int64)
    if idx.size and (idx.min() - h < 0 or idx.max() >= y.shape[0]):
        raise AlignmentError(
            f"target indices {idx.min()}..{idx.max()} with h={h} fall outside a series "
            f"of length {y.shape[0]}"
        )
    return y[idx - h].copy(), y[idx].copy()
