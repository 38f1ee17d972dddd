"""Pure NumPy implementations of the inner-loop kernels.

These mirror ``_kernels.pyx`` one-for-one and are used whenever the compiled
extension is unavailable (or ``ELMCAST_PURE_PYTHON=1`` is set).
"""
import numpy as np


def bias_relu_inplace(a, b):
    """a <- max(0, a + b) with ``b`` broadcast along rows."""
    a += b
    np.maximum(a, 0.0, out=a)
    return a


def joint_histogram(x, y, bins, xmin, xmax, ymin, ymax):
    """Equal-width 2-D histogram counts, shape (bins, bins), int64.

    The top edge of each range falls in the last bin. A zero-width range puts
    every sample in bin 0.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ix = _bin_index(x, bins, xmin, xmax)
    iy = _bin_index(y, bins, ymin, ymax)
    flat = np.bincount(ix * bins + iy, minlength=bins * bins)
    return flat.reshape(bins, bins).astype(np.int64)


def _bin_index(v, bins, lo, hi):
    span = hi - lo
    if span <= 0.0:
        return np.zeros(v.shape[0], dtype=np.int64)
    idx = ((v - lo) * (bins / span)).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)
    return idx


def lag_windows(values, w, n_rows, channels, out):
    """Fill ``out[i, c*w + k] = values[i + k, channels[c]]`` for i < n_rows."""
    for c, ch in enumerate(channels):
        view = np.lib.stride_tricks.sliding_window_view(values[:, ch], w)
        out[:n_rows, c * w:(c + 1) * w] = view[:n_rows]
    return out


def fill_linear(col, missing):
    """Linear gap fill of one channel in place; boundary runs take the nearest value.

    Known cells are never written. Returns the number of cells filled.
    """
    missing = np.asarray(missing, dtype=bool)
    n_missing = int(missing.sum())
    if n_missing == 0:
        return 0
    known = np.flatnonzero(~missing)
    gaps = np.flatnonzero(missing)
    # v0 + (v1 - v0) * k / d, evaluated left to right; the compiled kernel uses the same order
    right = np.searchsorted(known, gaps)
    left = right - 1
    lo = known[np.clip(left, 0, known.size - 1)]
    hi = known[np.clip(right, 0, known.size - 1)]
    v_lo = col[lo]
    v_hi = col[hi]
    filled = np.empty(gaps.size)
    leading = left < 0
    trailing = right >= known.size
    interior = ~(leading | trailing)
    filled[leading] = v_hi[leading]
    filled[trailing] = v_lo[trailing]
    d = (hi - lo)[interior].astype(np.float64)
    k = (gaps - lo)[interior].astype(np.float64)
    filled[interior] = v_lo[interior] + (v_hi[interior] - v_lo[interior]) * k / d
    col[gaps] = filled
    return n_missing
