"""Point-forecast error metrics, Gain over persistence and normalized MI.

Undefined quantities (division by a zero mean, zero target variance, zero
entropy) are reported as NaN rather than raised.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels

NAN = float("nan")


@dataclass(frozen=True)
class ErrorMetrics:
    rmse: float
    mae: float
    mbe: float
    r2: float
    nrmse: float
    nmae: float
    nmbe: float
    mean_observed: float
    n_points: int

    def as_dict(self):
        return asdict(self)


def error_metrics(targets, predictions) -> ErrorMetrics:
    """RMSE, MAE, MBE, R^2 and their mean-normalized forms.

    MBE is ``mean(pred - obs)``: positive means over-forecasting. The
    normalizer is the mean of ``targets``.
    """
    y = np.asarray(targets, dtype=np.float64).ravel()
    p = np.asarray(predictions, dtype=np.float64).ravel()
    if y.shape != p.shape or y.size == 0:
        raise ValueError(f"targets {y.shape} and predictions {p.shape} must match and be non-empty")
    if not (np.isfinite(y).all() and np.isfinite(p).all()):
        raise ValueError("non-finite values in targets or predictions")
    err = p - y
    rmse = math.sqrt(float(np.mean(err * err)))
    mae = float(np.mean(np.abs(err)))
    mbe = float(np.mean(err))
    ybar = float(np.mean(y))
    ss_res = float(np.sum(err * err))
    ss_tot = float(np.sum((y - ybar) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else NAN
    if ybar != 0:
        nrmse, nmae, nmbe = rmse / ybar, mae / ybar, mbe / ybar
    else:
        nrmse = nmae = nmbe = NAN
    return ErrorMetrics(rmse, mae, mbe, r2, nrmse, nmae, nmbe, ybar, int(y.size))


def gain(rmse_persistence, rmse_model):
    """Relative RMSE reduction against persistence; NaN when persistence is perfect."""
    if rmse_persistence <= 0:
        return NAN
    return (rmse_persistence - rmse_model) / rmse_persistence


def _entropy(p):
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def normalized_mutual_information(x, y, bins=32):
    """Histogram estimate of ``MI(x, y) / sqrt(H(x) H(y))`` in nats, clamped to [0, 1].

    Each variable is cut into ``bins`` equal-width bins over its own range;
    the marginal entropies come from the same binning as the joint. Returns
    NaN when either variable is constant.
    """
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError("x and y must have the same length")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if x.size < 2 * bins:
        raise ValueError(f"need at least {2 * bins} samples for {bins} bins, got {x.size}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("non-finite samples")
    counts = kernels.joint_histogram(x, y, bins, x.min(), x.max(), y.min(), y.max())
    pxy = counts / counts.sum()
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    hx, hy = _entropy(px), _entropy(py)
    if hx <= 0 or hy <= 0:
        return NAN
    mi = hx + hy - _entropy(pxy.ravel())
    return float(min(max(mi / math.sqrt(hx * hy), 0.0), 1.0))


def pearson_matrix(columns):
    """Pearson correlation between the columns of a 2-D array (unit diagonal)."""
    a = np.asarray(columns, dtype=np.float64)
    c = a - a.mean(axis=0)
    norm = np.sqrt(np.sum(c * c, axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (c.T @ c) / np.outer(norm, norm)
    r = np.clip((r + r.T) / 2.0, -1.0, 1.0)
    ok = norm > 0
    r[np.diag_indices_from(r)] = np.where(ok, 1.0, NAN)
    return r
