"""Command-line entry point: ``elmcast {hindcast,train,predict,mi,validate}``.

Any RunConfig field can come from a ``key=value`` file given with
``--config``; command-line flags win over the file. ``ELMCAST_OUTPUT_DIR``
overrides the output directory unless ``--output-dir`` is passed.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .elm import load_model, predict, save_model, train
from .errors import ElmcastError, RangeError
from .features import (
    build_supervised_windows,
    chronological_split,
    fit_series_scaler,
    forecast_features,
)
from .harness import (
    VARIABLE_LABELS,
    RunConfig,
    compute_mi_matrix,
    emit_plot_data,
    emit_tables,
    load_table,
    run_hindcast,
    write_matrix_csv,
)
from .ingest import CHANNELS, epoch_hours_to_iso, fill_gaps, parse_energy_csv, validate_table
from .metrics import error_metrics

log = logging.getLogger("elmcast")

OUTPUT_ENV = "ELMCAST_OUTPUT_DIR"

# flag name -> RunConfig field
FLAG_FIELDS = {
    "data": "data_path",
    "window": "window",
    "horizons": "horizons",
    "hidden": "hidden",
    "inits": "inits",
    "ridge": "ridge",
    "seed": "seed",
    "train_fraction": "train_fraction",
    "modes": "modes",
    "mi_bins": "mi_bins",
    "output_dir": "output_dir",
    "jobs": "n_jobs",
    "store_horizons": "store_horizons",
    "profile_start": "profile_start",
    "profile_hours": "profile_hours",
}


def parse_int_list(text):
    """``"1-10"``, ``"1,2,5"`` or a mix such as ``"1-3,6"``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _coerce(name, raw):
    if name in ("horizons", "store_horizons"):
        return parse_int_list(raw) if isinstance(raw, str) else tuple(raw)
    if name == "modes":
        return tuple(m.strip() for m in raw.split(",") if m.strip()) if isinstance(raw, str) else tuple(raw)
    if name in ("window", "hidden", "inits", "seed", "mi_bins", "n_jobs", "profile_start",
                "profile_hours"):
        return int(raw)
    if name in ("ridge", "train_fraction"):
        return float(raw)
    return str(raw)


def read_config_file(path):
    """Parse ``key=value`` lines; ``#`` starts a comment. Keys may use flag or field names."""
    valid = {f.name for f in fields(RunConfig)}
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ElmcastError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        key = FLAG_FIELDS.get(key, key)
        if key not in valid:
            raise ElmcastError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def build_run_config(args) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    env_out = os.environ.get(OUTPUT_ENV)
    if env_out:
        values["output_dir"] = env_out
    for flag, name in FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = _coerce(name, v)
    return RunConfig(**values)


def _add_run_flags(p, with_data=True):
    p.add_argument("--config", help="key=value file supplying any option below")
    if with_data:
        p.add_argument("--data", help="hourly energy CSV")
    p.add_argument("--window", type=int, help="lagged hours per channel (48)")
    p.add_argument("--hidden", type=int, help="hidden neurons (4096)")
    p.add_argument("--inits", type=int, help="random initializations (50)")
    p.add_argument("--ridge", type=float, help="ridge strength (1e-6)")
    p.add_argument("--seed", type=int, help="base random seed (0)")
    p.add_argument("--train-fraction", type=float, help="chronological train share (0.8)")
    p.add_argument("--jobs", type=int, help="threads for the initialization draws (1)")
    p.add_argument("--output-dir", help=f"output directory (or ${OUTPUT_ENV})")


def make_parser():
    parser = argparse.ArgumentParser(prog="elmcast", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hindcast", help="full experiment: metric tables for every horizon")
    _add_run_flags(p)
    p.add_argument("--horizons", help="e.g. 1-10 or 1,5,10")
    p.add_argument("--modes", help="comma list from mimo,siso,persistence")
    p.add_argument("--mi-bins", type=int, help="histogram bins for the MI matrix (32)")
    p.add_argument("--store-horizons", help="horizons whose predictions feed the plot files (1)")
    p.add_argument("--profile-start", type=int, help="first test row of the profile window")
    p.add_argument("--profile-hours", type=int, help="profile window length (100)")

    p = sub.add_parser("train", help="train one model and save it")
    _add_run_flags(p)
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--mode", choices=("mimo", "siso"), default="mimo")
    p.add_argument("--channel", choices=CHANNELS, help="target channel for SISO")
    p.add_argument("--model", required=True, help="output model file (.npz)")

    p = sub.add_parser("predict", help="forecast with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="forecast CSV (default stdout)")

    p = sub.add_parser("mi", help="normalized mutual information matrix")
    p.add_argument("--config")
    p.add_argument("--data")
    p.add_argument("--mi-bins", type=int)
    p.add_argument("--out", help="CSV path (default <output-dir>/mi.csv)")
    p.add_argument("--output-dir")

    p = sub.add_parser("validate", help="ingest report for a CSV")
    p.add_argument("--data", required=True)
    return parser


def cmd_hindcast(args):
    cfg = build_run_config(args)
    if cfg.data_path is None:
        raise ElmcastError("--data is required")
    table, gaps = load_table(cfg.data_path)
    report = run_hindcast(cfg, table)
    report.gap_report = gaps
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_tables(report, out)
    if report.gap_report is not None:
        (out / "gap_report.txt").write_text(report.gap_report.to_text())
    for mode in cfg.modes:
        for h in cfg.store_horizons:
            if (mode, h) in report.predictions:
                try:
                    emit_plot_data(report, out / f"plots_{mode}", horizon=h, mode=mode)
                except RangeError as exc:
                    log.warning("skipping plot data for %s h=%d: %s", mode, h, exc)
    write_matrix_csv(out / "mi.csv", compute_mi_matrix(table, cfg.mi_bins))
    n_failed = len(report.failed_cells)
    print(f"wrote results to {out}; {n_failed} failed cell(s)")
    return 0 if n_failed == 0 else 1


def cmd_train(args):
    cfg = build_run_config(args)
    if cfg.data_path is None:
        raise ElmcastError("--data is required")
    table, _ = load_table(cfg.data_path)
    h = args.horizon
    if args.mode == "siso" and args.channel is None:
        raise ElmcastError("--channel is required with --mode siso")
    scaler = fit_series_scaler(table, cfg.window, h, cfg.train_fraction)
    ds = build_supervised_windows(table, cfg.window, h, args.mode, channel=args.channel,
                                  scaler=scaler)
    tr, te = chronological_split(ds, cfg.train_fraction)
    model = train(tr, cfg.elm_config(), scaler=scaler, n_jobs=cfg.n_jobs)
    save_model(model, args.model)
    pred = predict(model, te.features, invert=True)
    obs = table.values[np.ix_(te.target_index, model.target_channels)]
    print(f"saved {args.model}: draw {model.init_index}, in-sample rmse {model.train_rmse:.6g} "
          f"(scaled), {model.train_seconds:.2f} s")
    for j, ch in enumerate(model.target_channels):
        m = error_metrics(obs[:, j], pred[:, j])
        print(f"  {CHANNELS[ch]:<10} test nRMSE {m.nrmse:.4f}  R2 {m.r2:.4f}")
    return 0


def cmd_predict(args):
    model = load_model(args.model)
    table, _ = load_table(args.data)
    channel = model.target_channels[0] if model.mode == "siso" else None
    X, origin, target = forecast_features(table, model.window, model.horizon, model.mode,
                                          channel=channel, scaler=model.scaler)
    Y = predict(model, X, invert=model.scaler is not None)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["issue_timestamp", "target_timestamp"]
                   + [VARIABLE_LABELS[c] for c in model.target_channels])
        for o, t, row in zip(origin, target, Y):
            w.writerow([epoch_hours_to_iso(o), epoch_hours_to_iso(t)] + [repr(float(v)) for v in row])
    finally:
        if args.out:
            fh.close()
    return 0


def cmd_mi(args):
    cfg = build_run_config(args)
    if cfg.data_path is None:
        raise ElmcastError("--data is required")
    table, _ = load_table(cfg.data_path)
    mi = compute_mi_matrix(table, cfg.mi_bins)
    out = Path(args.out) if args.out else Path(cfg.output_dir) / "mi.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(out, mi)
    print(f"wrote {out}")
    return 0


def cmd_validate(args):
    table = parse_energy_csv(args.data)
    print(validate_table(table).to_text(), end="")
    _, gaps = fill_gaps(table)
    print(gaps.to_text(), end="")
    return 0


COMMANDS = {
    "hindcast": cmd_hindcast,
    "train": cmd_train,
    "predict": cmd_predict,
    "mi": cmd_mi,
    "validate": cmd_validate,
}


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ElmcastError, OSError, ValueError) as exc:
        print(f"elmcast: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
