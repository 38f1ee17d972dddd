"""Hindcast experiment: train per horizon, score the held-out tail, write files."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .baselines import persistence_forecast
from .elm import ElmConfig, predict, train, train_siso_suite
from .errors import ConfigError, RangeError
from .features import build_supervised_windows, chronological_split, fit_series_scaler
from .ingest import (
    CHANNELS,
    RawSeriesTable,
    epoch_hours_to_iso,
    fill_gaps,
    parse_energy_csv,
    regularize_hourly,
)
from .metrics import ErrorMetrics, error_metrics, gain, normalized_mutual_information, pearson_matrix

log = logging.getLogger(__name__)

VARIABLE_LABELS = ("Total", "Thermal", "Hydraulics", "Solar", "Wind", "Bioenergy", "Imported")
MODES = ("mimo", "siso", "persistence")
TABLE_METRICS = ("r2", "nmae", "nmbe", "nrmse", "gain")


@dataclass(frozen=True)
class RunConfig:
    data_path: str | None = None
    window: int = 48
    horizons: tuple = tuple(range(1, 11))
    hidden: int = 4096
    inits: int = 50
    ridge: float = 1e-6
    seed: int = 0
    train_fraction: float = 0.8
    modes: tuple = ("mimo", "persistence")
    mi_bins: int = 32
    output_dir: str = "results"
    n_jobs: int = 1
    store_horizons: tuple = (1,)
    profile_start: int = 0
    profile_hours: int = 100

    def __post_init__(self):
        hs = tuple(int(h) for h in self.horizons)
        if not hs or min(hs) < 1:
            raise ConfigError(f"horizons must be non-empty and >= 1, got {self.horizons}")
        object.__setattr__(self, "horizons", hs)
        modes = tuple(m.lower() for m in self.modes)
        bad = [m for m in modes if m not in MODES]
        if bad or not modes:
            raise ConfigError(f"modes must be drawn from {MODES}, got {self.modes}")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "store_horizons", tuple(int(h) for h in self.store_horizons))
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must be in (0, 1)")

    def elm_config(self) -> ElmConfig:
        return ElmConfig(hidden_width=self.hidden, init_count=self.inits,
                         ridge=self.ridge, seed=self.seed)

    def digest(self):
        d = asdict(self)
        for k in ("output_dir", "n_jobs", "data_path"):
            d.pop(k)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def table_digest(table: RawSeriesTable):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(table.timestamps).tobytes())
    h.update(np.ascontiguousarray(table.values).tobytes())
    return h.hexdigest()[:16]


@dataclass
class Cell:
    metrics: ErrorMetrics | None = None
    gain: float | None = None
    error: str | None = None

    @property
    def failed(self):
        return self.error is not None


@dataclass
class PredictionSet:
    """Observed and forecast MW on the test rows of one (mode, horizon)."""

    target_timestamps: np.ndarray
    target_index: np.ndarray
    observed: np.ndarray  # (n, 7)
    predicted: np.ndarray  # (n, 7)

    @property
    def residuals(self):
        return self.predicted - self.observed


@dataclass
class HindcastReport:
    config: RunConfig
    cells: dict = field(default_factory=dict)  # (mode, channel, horizon) -> Cell
    wall_seconds: dict = field(default_factory=dict)  # (mode, horizon) -> seconds
    winners: dict = field(default_factory=dict)  # (mode, horizon, channel) -> draw
    predictions: dict = field(default_factory=dict)  # (mode, horizon) -> PredictionSet
    test_rows: dict = field(default_factory=dict)  # horizon -> (n_train, n_test)
    provenance: dict = field(default_factory=dict)
    gap_report: object = None

    @property
    def failed_cells(self):
        return [k for k, c in self.cells.items() if c.failed]

    def metric(self, mode, channel, horizon, name):
        c = self.cells.get((mode, channel, horizon))
        if c is None or c.failed:
            return float("nan")
        if name == "gain":
            return float("nan") if c.gain is None else c.gain
        return getattr(c.metrics, name)


def _score(report, mode, h, obs, pred, pers_rmse):
    for j, ch in enumerate(CHANNELS):
        m = error_metrics(obs[:, j], pred[:, j])
        g = gain(pers_rmse[j], m.rmse) if mode != "persistence" else None
        report.cells[(mode, ch, h)] = Cell(m, g)


def _fail(report, mode, h, exc):
    log.warning("%s h=%d failed: %s", mode, h, exc)
    for ch in CHANNELS:
        report.cells[(mode, ch, h)] = Cell(error=f"{type(exc).__name__}: {exc}")


def load_table(path):
    """Parse, re-grid skipped hours and fill gaps. Returns ``(table, GapReport)``."""
    table, inserted = regularize_hourly(parse_energy_csv(path))
    if inserted:
        log.warning("%s: %d skipped hour(s) inserted as missing rows", path, inserted)
    table, gaps = fill_gaps(table)
    gaps.inserted_rows = inserted
    return table, gaps


def run_hindcast(config: RunConfig, table: RawSeriesTable | None = None) -> HindcastReport:
    """Run every requested mode at every horizon on the chronological test tail.

    Errors in one (mode, horizon) are recorded on its cells and the run moves
    on. Gain is computed against persistence on the same target instants.
    """
    gap_report = None
    if table is None:
        if config.data_path is None:
            raise ConfigError("no data path given")
        table, gap_report = load_table(config.data_path)
    report = HindcastReport(config, gap_report=gap_report)
    report.provenance = {
        "config_hash": config.digest(),
        "data_hash": table_digest(table),
        "kernel_backend": kernels.BACKEND,
        "rows": len(table),
    }
    elm_cfg = config.elm_config()
    w, frac = config.window, config.train_fraction
    values = table.values

    for h in config.horizons:
        try:
            scaler = fit_series_scaler(table, w, h, frac)
            ds = build_supervised_windows(table, w, h, "mimo", scaler=scaler)
            tr, te = chronological_split(ds, frac)
        except Exception as exc:  # noqa: BLE001 - every cell at this horizon fails
            for mode in config.modes:
                _fail(report, mode, h, exc)
            continue
        report.test_rows[h] = (len(tr), len(te))
        tidx = te.target_index
        obs = values[tidx]
        pers = np.column_stack(
            [persistence_forecast(values[:, j], h, tidx)[0] for j in range(len(CHANNELS))]
        )
        pers_rmse = [error_metrics(obs[:, j], pers[:, j]).rmse for j in range(len(CHANNELS))]
        keep = h in config.store_horizons

        if "persistence" in config.modes:
            _score(report, "persistence", h, obs, pers, pers_rmse)
            report.wall_seconds[("persistence", h)] = 0.0
            if keep:
                report.predictions[("persistence", h)] = PredictionSet(
                    te.target_timestamps, tidx, obs, pers)

        if "mimo" in config.modes:
            try:
                model = train(tr, elm_cfg, scaler=scaler, n_jobs=config.n_jobs)
                pred = predict(model, te.features, invert=True)
                _score(report, "mimo", h, obs, pred, pers_rmse)
                report.wall_seconds[("mimo", h)] = model.train_seconds
                for ch in CHANNELS:
                    report.winners[("mimo", h, ch)] = model.init_index
                if keep:
                    report.predictions[("mimo", h)] = PredictionSet(
                        te.target_timestamps, tidx, obs, pred)
            except Exception as exc:  # noqa: BLE001
                _fail(report, "mimo", h, exc)

        if "siso" in config.modes:
            try:
                suite = train_siso_suite(table, w, h, elm_cfg, frac, scaler=scaler,
                                         n_jobs=config.n_jobs)
                pred = np.empty_like(obs)
                for j, model in enumerate(suite.models):
                    sds = build_supervised_windows(table, w, h, "siso", channel=j, scaler=scaler)
                    _, ste = chronological_split(sds, frac)
                    if not np.array_equal(ste.target_index, tidx):
                        raise RuntimeError("SISO test instants differ from MIMO test instants")
                    pred[:, j] = predict(model, ste.features, invert=True)[:, 0]
                    report.winners[("siso", h, CHANNELS[j])] = model.init_index
                _score(report, "siso", h, obs, pred, pers_rmse)
                report.wall_seconds[("siso", h)] = suite.wall_seconds
                if keep:
                    report.predictions[("siso", h)] = PredictionSet(
                        te.target_timestamps, tidx, obs, pred)
            except Exception as exc:  # noqa: BLE001
                _fail(report, "siso", h, exc)
        log.info("horizon %d done", h)
    return report


def compute_mi_matrix(table: RawSeriesTable, bins=32):
    """Normalized MI between every channel pair; constant channels give NaN rows."""
    k = len(table.channels)
    mi = np.full((k, k), np.nan)
    cols = [np.ascontiguousarray(table.values[:, j]) for j in range(k)]
    for i in range(k):
        for j in range(i, k):
            v = normalized_mutual_information(cols[i], cols[j], bins)
            if i == j and not math.isnan(v):
                v = 1.0
            mi[i, j] = mi[j, i] = v
    return mi


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def write_matrix_csv(path, matrix, labels=VARIABLE_LABELS):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([""] + list(labels))
        for lab, row in zip(labels, matrix):
            w.writerow([lab] + [_fmt(v) for v in row])


def _footnotes(report, mode, writer, horizons):
    notes = []
    for h in horizons:
        for ch in CHANNELS:
            c = report.cells.get((mode, ch, h))
            if c is None:
                notes.append(f"{ch} h={h}: not run")
            elif c.failed:
                notes.append(f"{ch} h={h}: {c.error}")
    for n in notes:
        writer.writerow([f"# failed: {n}"])


def _metric_table(report, mode, name, path):
    hs = report.config.horizons
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["horizon"] + list(VARIABLE_LABELS))
        for h in hs:
            w.writerow([h] + [_fmt(report.metric(mode, ch, h, name)) for ch in CHANNELS])
        _footnotes(report, mode, w, hs)


def _rel_diff(siso, mimo):
    if math.isnan(siso) or math.isnan(mimo) or mimo == 0:
        return float("nan")
    return 100.0 * (siso - mimo) / mimo


def emit_tables(report: HindcastReport, out_dir):
    """Write the per-metric horizon tables, long-form metrics and a text summary.

    Returns the list of written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    main_mode = "mimo" if "mimo" in report.config.modes else report.config.modes[0]
    for name in TABLE_METRICS:
        p = out / f"{name}.csv"
        _metric_table(report, main_mode, name, p)
        written.append(p)
    if "siso" in report.config.modes:
        for name in TABLE_METRICS:
            p = out / f"siso_{name}.csv"
            _metric_table(report, "siso", name, p)
            written.append(p)

    p = out / "siso_vs_mimo.csv"
    with p.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variable", "horizon", "nrmse_siso", "nrmse_mimo", "nrmse_rel_diff_pct",
                    "nmae_siso", "nmae_mimo", "nmae_rel_diff_pct"])
        for ch, lab in zip(CHANNELS, VARIABLE_LABELS):
            for h in report.config.horizons:
                row = [lab, h]
                for name in ("nrmse", "nmae"):
                    s = report.metric("siso", ch, h, name)
                    m = report.metric("mimo", ch, h, name)
                    row += [_fmt(s), _fmt(m), _fmt(_rel_diff(s, m))]
                w.writerow(row)
        if not {"siso", "mimo"} <= set(report.config.modes):
            w.writerow(["# failed: SISO and MIMO must both be run to fill this table"])
        else:
            _footnotes(report, "siso", w, report.config.horizons)
    written.append(p)

    for mode in report.config.modes:
        p = out / f"metrics_{mode}.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["variable", "horizon", "metric", "value"])
            for ch, lab in zip(CHANNELS, VARIABLE_LABELS):
                for h in report.config.horizons:
                    c = report.cells.get((mode, ch, h))
                    if c is None or c.failed:
                        continue
                    for k, v in c.metrics.as_dict().items():
                        w.writerow([lab, h, k, _fmt(v)])
                    if c.gain is not None:
                        w.writerow([lab, h, "gain", _fmt(c.gain)])
            _footnotes(report, mode, w, report.config.horizons)
        written.append(p)

    p = out / "summary.txt"
    p.write_text(format_summary(report))
    written.append(p)
    return written


def format_summary(report: HindcastReport) -> str:
    cfg = report.config
    lines = [
        "hindcast summary",
        f"config hash {report.provenance.get('config_hash')}  "
        f"data hash {report.provenance.get('data_hash')}  "
        f"kernels {report.provenance.get('kernel_backend')}",
        f"window {cfg.window}  hidden {cfg.hidden}  inits {cfg.inits}  ridge {cfg.ridge:g}  "
        f"seed {cfg.seed}  train fraction {cfg.train_fraction}",
        "metrics are computed on the whole chronological test split "
        "(its length is listed per horizon; it need not be exactly one year)",
    ]
    for h, (ntr, nte) in sorted(report.test_rows.items()):
        lines.append(f"  h={h}: {ntr} train rows, {nte} test rows ({nte / 8760:.2f} years)")
    for mode in cfg.modes:
        for name in TABLE_METRICS:
            if mode == "persistence" and name == "gain":
                continue
            lines.append("")
            lines.append(f"{mode} {name}")
            lines.append(f"{'h':>3} " + " ".join(f"{lab:>10}" for lab in VARIABLE_LABELS))
            for h in cfg.horizons:
                vals = [report.metric(mode, ch, h, name) for ch in CHANNELS]
                lines.append(f"{h:>3} " + " ".join(
                    f"{'':>10}" if math.isnan(v) else f"{v:>10.4f}" for v in vals))
    lines.append("")
    lines.append("training wall time (s)")
    for (mode, h), s in sorted(report.wall_seconds.items()):
        if mode != "persistence":
            lines.append(f"  {mode} h={h}: {s:.3f}")
    failed = report.failed_cells
    lines.append("")
    lines.append(f"failed cells: {len(failed)}")
    for mode, ch, h in failed:
        lines.append(f"  {mode} {ch} h={h}: {report.cells[(mode, ch, h)].error}")
    return "\n".join(lines) + "\n"


def emit_plot_data(report: HindcastReport, out_dir, horizon=None, mode="mimo",
                   start=None, hours=None):
    """Write the forecast profile window and the residual files for one horizon.

    ``profile_h{h}.csv`` is long-format (timestamp, variable, series, value_mw)
    with one observed and one predicted row per instant and variable.
    ``residuals_h{h}.csv`` holds predicted-minus-observed MW on every test row
    and ``residual_corr_h{h}.csv`` their 7x7 Pearson matrix.
    """
    cfg = report.config
    horizon = cfg.store_horizons[0] if horizon is None else horizon
    start = cfg.profile_start if start is None else start
    hours = cfg.profile_hours if hours is None else hours
    ps = report.predictions.get((mode, horizon))
    if ps is None:
        raise RangeError(f"no stored predictions for {mode} at h={horizon}")
    n = ps.observed.shape[0]
    if start < 0 or hours < 1 or start + hours > n:
        raise RangeError(f"window {start}..{start + hours} outside the {n}-row test range")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stamps = [epoch_hours_to_iso(t) for t in ps.target_timestamps]

    prof = out / f"profile_h{horizon}.csv"
    with prof.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "variable", "series", "value_mw"])
        for i in range(start, start + hours):
            for j, lab in enumerate(VARIABLE_LABELS):
                w.writerow([stamps[i], lab, "observed", _fmt(ps.observed[i, j])])
                w.writerow([stamps[i], lab, "predicted", _fmt(ps.predicted[i, j])])

    res = ps.residuals
    rpath = out / f"residuals_h{horizon}.csv"
    with rpath.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp"] + list(VARIABLE_LABELS))
        for t, row in zip(stamps, res):
            w.writerow([t] + [_fmt(v) for v in row])
    cpath = out / f"residual_corr_h{horizon}.csv"
    corr = pearson_matrix(res)
    write_matrix_csv(cpath, corr)
    return [prof, rpath, cpath], corr
