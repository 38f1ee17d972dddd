"""Extreme learning machine: frozen random ReLU layer plus closed-form readout."""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg
from scipy.linalg import blas

from . import kernels
from .errors import ConfigError, DimensionError, NumericError, ScalerStateError
from .features import (
    ScalerParams,
    WindowedDataset,
    build_supervised_windows,
    chronological_split,
    fit_series_scaler,
)
from .ingest import CHANNELS

FORMAT_VERSION = 1

# hidden matrices up to this many cells are built whole; larger ones are streamed in row blocks
CACHE_CELLS = 2**25
BLOCK_ROWS = 4096


@dataclass(frozen=True)
class ElmConfig:
    hidden_width: int = 4096
    init_count: int = 50
    ridge: float = 1e-6
    seed: int = 0
    input_width: int | None = None
    output_width: int | None = None

    def __post_init__(self):
        if self.hidden_width < 1:
            raise ConfigError(f"hidden_width must be >= 1, got {self.hidden_width}")
        if self.init_count < 1:
            raise ConfigError(f"init_count must be >= 1, got {self.init_count}")
        if not self.ridge >= 0:
            raise ConfigError(f"ridge must be >= 0, got {self.ridge}")


def parameter_count(input_width, hidden_width, output_width):
    """Trainable plus frozen weights: input->hidden and hidden->output (biases excluded)."""
    return input_width * hidden_width + hidden_width * output_width


def _draw_rng(seed, draw):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, draw])))


def init_hidden_layer(config: ElmConfig, draw=0):
    """Input weights ``(I, H)`` and biases ``(H,)``, i.i.d. uniform on [-1, 1].

    The stream is keyed on ``(config.seed, draw)``. Neurons are drawn one at a
    time (I weights then the bias), so the first ``k`` neurons of a wider layer
    equal a ``k``-wide layer drawn from the same key.
    """
    if config.input_width is None:
        raise ConfigError("input_width must be set before drawing a hidden layer")
    if not 0 <= draw < config.init_count:
        raise ConfigError(f"draw {draw} outside 0..{config.init_count - 1}")
    I, H = config.input_width, config.hidden_width
    a = _draw_rng(config.seed, draw).uniform(-1.0, 1.0, size=(H, I + 1))
    weights = np.ascontiguousarray(a[:, :I].T)
    biases = np.ascontiguousarray(a[:, I])
    weights.flags.writeable = False
    biases.flags.writeable = False
    return weights, biases


def hidden_map(input_weights, biases, X):
    """ReLU hidden activations ``max(0, X @ W + b)``, shape ``(n, H)``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or input_weights.ndim != 2:
        raise DimensionError("X and input_weights must be 2-D")
    if X.shape[1] != input_weights.shape[0]:
        raise DimensionError(
            f"X has {X.shape[1]} columns, input weights expect {input_weights.shape[0]}"
        )
    if biases.shape != (input_weights.shape[1],):
        raise DimensionError(
            f"bias shape {biases.shape} does not match hidden width {input_weights.shape[1]}"
        )
    out = np.ascontiguousarray(X @ input_weights)
    return kernels.bias_relu_inplace(out, np.ascontiguousarray(biases, dtype=np.float64))


def _as_2d(y):
    y = np.asarray(y, dtype=np.float64)
    return y[:, None] if y.ndim == 1 else y


def _gram(A):
    """Upper triangle of ``A.T @ A`` in a Fortran-ordered array."""
    return blas.dsyrk(1.0, A.T, trans=0, lower=0)


def _symmetrize_upper(G):
    return np.triu(G) + np.triu(G, 1).T


def _well_conditioned(cho):
    d = np.abs(np.diag(cho))
    return d.size > 0 and d.min() > 0 and (d.min() / d.max()) ** 2 > d.size * np.finfo(float).eps


def _pinv_gram_solve(G, R):
    """Minimum-norm solution of ``G @ W = R`` for symmetric PSD ``G``."""
    s, V = linalg.eigh(_symmetrize_upper(G), check_finite=False)
    cutoff = max(s.max(), 0.0) * G.shape[0] * np.finfo(float).eps
    inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return V @ (inv[:, None] * (V.T @ R))


def _solve_gram(G, R, ridge):
    """Solve ``(G + ridge*I) W = R`` given only the upper triangle of ``G``."""
    G = np.array(G, order="F", copy=True)
    if ridge > 0:
        G[np.diag_indices_from(G)] += ridge
    try:
        cho = linalg.cho_factor(G, lower=False, check_finite=False)
    except linalg.LinAlgError:
        cho = None
    if cho is not None and (ridge > 0 or _well_conditioned(cho[0])):
        return linalg.cho_solve(cho, R, check_finite=False)
    if ridge > 0:
        raise NumericError("regularized normal system is not positive definite")
    return None


def solve_output_weights(hidden, targets, ridge=1e-6):
    """Readout weights minimising ``||hidden @ W - targets||^2 + ridge * ||W||^2``.

    With ``ridge == 0`` the minimum-norm least-squares (pseudo-inverse)
    solution is returned. The normal system is formed on whichever side is
    smaller: ``H x H`` when rows >= columns, the ``n x n`` dual otherwise.
    Rank-deficient problems at ``ridge == 0`` fall back to an SVD solve.
    """
    Hm = np.asarray(hidden, dtype=np.float64)
    Y = _as_2d(targets)
    if Hm.ndim != 2 or Y.shape[0] != Hm.shape[0]:
        raise DimensionError(f"hidden {Hm.shape} and targets {Y.shape} disagree")
    if Hm.shape[0] < 1:
        raise DimensionError("need at least one row")
    if not (np.isfinite(Hm).all() and np.isfinite(Y).all()):
        raise NumericError("non-finite values in hidden matrix or targets")
    if ridge < 0:
        raise ConfigError("ridge must be non-negative")
    n, m = Hm.shape
    if n >= m:
        W = _solve_gram(_gram(Hm), Hm.T @ Y, ridge)
    else:
        A = _solve_gram(_gram(Hm.T), Y, ridge)
        W = None if A is None else Hm.T @ A
    if W is None:
        W = linalg.lstsq(Hm, Y, lapack_driver="gelsd", check_finite=False)[0]
    return W


def selection_rmse(pred, Y):
    """RMSE over every output cell, all outputs weighted equally."""
    d = np.asarray(pred) - np.asarray(Y)
    return float(np.sqrt(np.mean(d * d)))


@dataclass(frozen=True)
class _Candidate:
    draw: int
    rmse: float
    output_weights: np.ndarray


def _fit_draw(X, Y, config: ElmConfig, draw):
    W, b = init_hidden_layer(config, draw)
    n = X.shape[0]
    H = config.hidden_width
    if n < H or n * H <= CACHE_CELLS:
        Hm = hidden_map(W, b, X)
        beta = solve_output_weights(Hm, Y, config.ridge)
        pred = Hm @ beta
    else:
        if not np.isfinite(X).all() or not np.isfinite(Y).all():
            raise NumericError("non-finite values in training data")
        G = np.zeros((H, H), order="F")
        R = np.zeros((H, Y.shape[1]))
        for start in range(0, n, BLOCK_ROWS):
            Hb = hidden_map(W, b, X[start:start + BLOCK_ROWS])
            blas.dsyrk(1.0, Hb.T, beta=1.0, c=G, trans=0, lower=0, overwrite_c=1)
            R += Hb.T @ Y[start:start + BLOCK_ROWS]
        beta = _solve_gram(G, R, config.ridge)
        if beta is None:
            beta = _pinv_gram_solve(G, R)
        pred = np.vstack([
            hidden_map(W, b, X[s:s + BLOCK_ROWS]) @ beta for s in range(0, n, BLOCK_ROWS)
        ])
    return _Candidate(draw, selection_rmse(pred, Y), beta)


@dataclass(frozen=True)
class ElmModel:
    input_weights: np.ndarray
    biases: np.ndarray
    output_weights: np.ndarray
    config: ElmConfig
    train_rmse: float
    init_index: int
    scaler: ScalerParams | None = None  # per-channel, all 7 channels
    window: int | None = None
    horizon: int | None = None
    mode: str = "mimo"
    channels: tuple = tuple(range(len(CHANNELS)))
    target_channels: tuple = tuple(range(len(CHANNELS)))
    candidate_rmse: np.ndarray = field(default_factory=lambda: np.empty(0))
    train_seconds: float = float("nan")

    @property
    def input_width(self):
        return self.input_weights.shape[0]

    @property
    def hidden_width(self):
        return self.input_weights.shape[1]

    @property
    def output_width(self):
        return self.output_weights.shape[1]

    @property
    def n_parameters(self):
        return parameter_count(self.input_width, self.hidden_width, self.output_width)


def _xy(data):
    if isinstance(data, WindowedDataset):
        return data.features, data.targets
    X, Y = data
    return np.asarray(X, dtype=np.float64), _as_2d(Y)


def train(data, config: ElmConfig, scaler: ScalerParams | None = None, n_jobs=1) -> ElmModel:
    """Fit ``config.init_count`` random layers and keep the best in-sample one.

    ``data`` is a training :class:`WindowedDataset` or an ``(X, Y)`` pair.
    Each draw has its own seeded stream, so the winner (lowest in-sample
    RMSE, earliest draw on ties) does not depend on ``n_jobs``.
    """
    X, Y = _xy(data)
    if X.shape[0] < 1:
        raise DimensionError("training split is empty")
    if X.shape[0] != Y.shape[0]:
        raise DimensionError(f"{X.shape[0]} feature rows but {Y.shape[0]} target rows")
    cfg = ElmConfig(
        hidden_width=config.hidden_width,
        init_count=config.init_count,
        ridge=config.ridge,
        seed=config.seed,
        input_width=X.shape[1],
        output_width=Y.shape[1],
    )
    t0 = time.perf_counter()
    draws = range(cfg.init_count)
    if n_jobs and n_jobs > 1 and cfg.init_count > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            cands = list(pool.map(lambda d: _fit_draw(X, Y, cfg, d), draws))
    else:
        cands = [_fit_draw(X, Y, cfg, d) for d in draws]
    elapsed = time.perf_counter() - t0

    best = min(cands, key=lambda c: (c.rmse, c.draw))
    W, b = init_hidden_layer(cfg, best.draw)
    beta = np.ascontiguousarray(best.output_weights)
    beta.flags.writeable = False
    extra = {}
    if isinstance(data, WindowedDataset):
        extra = dict(
            window=data.window,
            horizon=data.horizon,
            mode="mimo" if len(data.channels) > 1 else "siso",
            channels=tuple(data.channels),
            target_channels=tuple(data.target_channels),
        )
    return ElmModel(
        input_weights=W,
        biases=b,
        output_weights=beta,
        config=cfg,
        train_rmse=best.rmse,
        init_index=best.draw,
        scaler=scaler,
        candidate_rmse=np.array([c.rmse for c in cands]),
        train_seconds=elapsed,
        **extra,
    )


def predict(model: ElmModel, features, invert=False):
    """Forecast for each feature row; with ``invert`` the result is in MW."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_width:
        raise DimensionError(
            f"features have shape {X.shape}, model expects width {model.input_width}"
        )
    n = X.shape[0]
    if n * model.hidden_width <= CACHE_CELLS:
        Y = hidden_map(model.input_weights, model.biases, X) @ model.output_weights
    else:
        Y = np.vstack([
            hidden_map(model.input_weights, model.biases, X[s:s + BLOCK_ROWS]) @ model.output_weights
            for s in range(0, n, BLOCK_ROWS)
        ])
    if invert:
        if model.scaler is None:
            raise ScalerStateError("model carries no scaler; cannot invert")
        Y = model.scaler.subset(model.target_channels).inverse(Y)
    return Y


@dataclass(frozen=True)
class SisoSuite:
    models: tuple
    wall_seconds: float


def train_siso_suite(table, w, h, config: ElmConfig, train_fraction=0.8, scaler=None,
                     n_jobs=1) -> SisoSuite:
    """One independent single-output model per channel, each on its own lags."""
    if scaler is None:
        scaler = fit_series_scaler(table, w, h, train_fraction)
    models = []
    wall = 0.0
    for ch in range(len(CHANNELS)):
        ds = build_supervised_windows(table, w, h, mode="siso", channel=ch, scaler=scaler)
        tr, _ = chronological_split(ds, train_fraction)
        m = train(tr, config, scaler=scaler, n_jobs=n_jobs)
        wall += m.train_seconds
        models.append(m)
    return SisoSuite(tuple(models), wall)


def save_model(model: ElmModel, path) -> None:
    """Write ``model`` to an uncompressed ``.npz`` archive (layout in README)."""
    meta = {
        "format_version": FORMAT_VERSION,
        "config": asdict(model.config),
        "train_rmse": model.train_rmse,
        "init_index": model.init_index,
        "window": model.window,
        "horizon": model.horizon,
        "mode": model.mode,
        "channels": list(model.channels),
        "target_channels": list(model.target_channels),
        "channel_names": list(CHANNELS),
        "train_seconds": model.train_seconds,
        "has_scaler": model.scaler is not None,
    }
    arrays = dict(
        meta=np.array(json.dumps(meta, sort_keys=True)),
        input_weights=model.input_weights,
        biases=model.biases,
        output_weights=model.output_weights,
        candidate_rmse=model.candidate_rmse,
    )
    if model.scaler is not None:
        arrays["scaler_min"] = model.scaler.minimum
        arrays["scaler_max"] = model.scaler.maximum
    with Path(path).open("wb") as fh:
        np.savez(fh, **arrays)


def load_model(path) -> ElmModel:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format {meta.get('format_version')!r}")
        scaler = None
        if meta["has_scaler"]:
            scaler = ScalerParams(z["scaler_min"].copy(), z["scaler_max"].copy())
        arrs = {k: z[k].copy() for k in ("input_weights", "biases", "output_weights")}
        cand = z["candidate_rmse"].copy()
    for a in arrs.values():
        a.flags.writeable = False
    return ElmModel(
        config=ElmConfig(**meta["config"]),
        train_rmse=meta["train_rmse"],
        init_index=meta["init_index"],
        scaler=scaler,
        window=meta["window"],
        horizon=meta["horizon"],
        mode=meta["mode"],
        channels=tuple(meta["channels"]),
        target_channels=tuple(meta["target_channels"]),
        candidate_rmse=cand,
        train_seconds=meta["train_seconds"],
        **arrs,
    )
