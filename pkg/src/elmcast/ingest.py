"""Reading, validating and gap-filling the hourly energy-mix CSV."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import kernels
from .errors import IntegrityError, SchemaError, UnrecoverableChannelError

CHANNELS = ("total", "thermal", "hydraulic", "solar", "wind", "bioenergy", "imported")
TIMESTAMP_COLUMN = "timestamp"
SECONDS_PER_HOUR = 3600


@dataclass(frozen=True)
class RawSeriesTable:
    """Hourly table of the seven channels in MW.

    ``timestamps`` are integer epoch hours (UTC). ``missing_mask`` flags cells
    that were empty or unparsable; their entry in ``values`` is NaN.
    """

    timestamps: np.ndarray
    values: np.ndarray
    missing_mask: np.ndarray
    channels: tuple = CHANNELS

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.missing_mask, dtype=bool)
        if vals.ndim != 2 or vals.shape[1] != len(CHANNELS):
            raise SchemaError(f"expected {len(CHANNELS)} channels, got shape {vals.shape}")
        if ts.shape != (vals.shape[0],) or mask.shape != vals.shape:
            raise SchemaError("timestamps, values and missing_mask disagree in shape")
        for name, arr in (("timestamps", ts), ("values", vals), ("missing_mask", mask)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self):
        return self.values.shape[0]

    @property
    def n_missing(self) -> int:
        return int(self.missing_mask.sum())

    def datetimes(self):
        return [epoch_hours_to_iso(t) for t in self.timestamps]


def epoch_hours_to_iso(hours) -> str:
    dt = datetime.fromtimestamp(int(hours) * SECONDS_PER_HOUR, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> int:
    """ISO-8601 string to integer epoch hours. Naive times are taken as UTC."""
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(s)
    except ValueError as exc:
        raise IntegrityError(f"unparsable timestamp {text!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    seconds = dt.timestamp()
    hours, rem = divmod(round(seconds), SECONDS_PER_HOUR)
    if rem != 0 or dt.microsecond:
        raise IntegrityError(f"timestamp {text!r} is not aligned to a whole hour")
    return int(hours)


def _parse_cell(text):
    text = text.strip() if text is not None else ""
    if not text:
        return None
    try:
        v = float(text)
    except ValueError:
        return None
    return v if np.isfinite(v) else None


def parse_energy_csv(path) -> RawSeriesTable:
    """Parse an hourly energy CSV into a :class:`RawSeriesTable`.

    The header must contain ``timestamp`` and the seven channel columns (any
    order, extra columns ignored). Empty or non-numeric cells become missing.
    Rows are returned in timestamp order; timestamps must already be strictly
    increasing in the file.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        dupes = sorted({h for h in header if header.count(h) > 1 and h})
        if dupes:
            raise SchemaError(f"{path}: duplicate header column(s): {', '.join(dupes)}")
        required = (TIMESTAMP_COLUMN,) + CHANNELS
        absent = [c for c in required if c not in header]
        if absent:
            raise SchemaError(f"{path}: missing header column(s): {', '.join(absent)}")
        ts_col = header.index(TIMESTAMP_COLUMN)
        cols = [header.index(c) for c in CHANNELS]

        stamps = []
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            rec = rec + [""] * (len(header) - len(rec))
            stamps.append(parse_timestamp(rec[ts_col]))
            rows.append([_parse_cell(rec[c]) for c in cols])

    ts = np.asarray(stamps, dtype=np.int64)
    if ts.size > 1:
        step = np.diff(ts)
        dup = np.flatnonzero(step == 0)
        if dup.size:
            raise IntegrityError(f"duplicate timestamp {epoch_hours_to_iso(ts[dup[0]])}")
        back = np.flatnonzero(step < 0)
        if back.size:
            i = back[0]
            raise IntegrityError(
                f"timestamps not increasing: {epoch_hours_to_iso(ts[i + 1])} "
                f"follows {epoch_hours_to_iso(ts[i])}"
            )
    values = np.array(
        [[np.nan if v is None else v for v in r] for r in rows], dtype=np.float64
    ).reshape(len(rows), len(CHANNELS))
    return RawSeriesTable(ts, values, np.isnan(values))


@dataclass
class GapReport:
    """Per-channel count of filled cells and length of the longest missing run."""

    filled: dict = field(default_factory=dict)
    longest_run: dict = field(default_factory=dict)
    boundary_filled: dict = field(default_factory=dict)
    inserted_rows: int = 0  # skipped hours re-inserted before filling

    @property
    def total_filled(self):
        return sum(self.filled.values())

    def to_text(self) -> str:
        lines = ["gap report", "channel      filled  longest_run  boundary"]
        for ch in self.filled:
            lines.append(
                f"{ch:<12} {self.filled[ch]:>6}  {self.longest_run[ch]:>11}  "
                f"{self.boundary_filled[ch]:>8}"
            )
        lines.append(f"total filled: {self.total_filled}")
        if self.inserted_rows:
            lines.append(f"skipped hours inserted as missing rows: {self.inserted_rows}")
        lines.append("interior gaps: linear interpolation between bounding known values")
        lines.append("leading/trailing gaps: nearest known value held constant")
        return "\n".join(lines) + "\n"


def _runs(mask):
    """Lengths of consecutive True runs, plus leading/trailing run lengths."""
    if not mask.any():
        return [], 0, 0
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    lengths = (ends - starts).tolist()
    lead = lengths[0] if starts[0] == 0 else 0
    trail = lengths[-1] if ends[-1] == mask.size else 0
    return lengths, lead, trail


def regularize_hourly(table: RawSeriesTable) -> tuple[RawSeriesTable, int]:
    """Put the table on a complete hourly grid.

    Hours skipped by the file become rows with every cell flagged missing, so
    :func:`fill_gaps` treats them like empty cells. Returns the table and the
    number of inserted rows; an already regular table is returned as is.
    """
    ts = table.timestamps
    if len(ts) < 2 or (np.diff(ts) == 1).all():
        return table, 0
    grid = np.arange(ts[0], ts[-1] + 1, dtype=np.int64)
    pos = ts - ts[0]
    values = np.full((grid.size, len(table.channels)), np.nan)
    mask = np.ones(values.shape, dtype=bool)
    values[pos] = table.values
    mask[pos] = table.missing_mask
    return RawSeriesTable(grid, values, mask, table.channels), int(grid.size - ts.size)


def fill_gaps(table: RawSeriesTable) -> tuple[RawSeriesTable, GapReport]:
    """Fill every missing cell; known cells are left bit-for-bit untouched.

    Interior runs are linearly interpolated between the bounding known values.
    Runs touching either end of the series repeat the nearest known value.
    """
    values = np.array(table.values, dtype=np.float64, copy=True)
    report = GapReport()
    for j, ch in enumerate(table.channels):
        mask = table.missing_mask[:, j]
        if mask.all():
            raise UnrecoverableChannelError(f"channel {ch!r} has no known values")
        lengths, lead, trail = _runs(mask)
        col = np.ascontiguousarray(values[:, j])
        kernels.fill_linear(col, mask.astype(np.uint8))
        values[:, j] = col
        report.filled[ch] = int(mask.sum())
        report.longest_run[ch] = max(lengths, default=0)
        report.boundary_filled[ch] = lead + trail
    filled = RawSeriesTable(table.timestamps, values, np.zeros_like(table.missing_mask))
    return filled, report


@dataclass
class ValidationReport:
    n_rows: int
    step_violations: list  # (row index, step in hours) where step != 1
    negative_cells: list  # (row index, channel, value)
    missing_counts: dict
    summary: dict  # channel -> {"mean", "min", "max"} over known cells

    @property
    def ok(self):
        return not self.step_violations and not self.negative_cells

    def to_text(self) -> str:
        out = [f"rows: {self.n_rows}"]
        out.append(f"step violations: {len(self.step_violations)}")
        for i, step in self.step_violations[:20]:
            out.append(f"  row {i}: step {step} h")
        out.append(f"negative-power cells: {len(self.negative_cells)}")
        for i, ch, v in self.negative_cells[:20]:
            out.append(f"  row {i} {ch}: {v:g} MW")
        out.append("channel      missing        mean         min         max")
        for ch, s in self.summary.items():
            out.append(
                f"{ch:<12} {self.missing_counts[ch]:>7} {s['mean']:>11.3f} "
                f"{s['min']:>11.3f} {s['max']:>11.3f}"
            )
        return "\n".join(out) + "\n"


def validate_table(table: RawSeriesTable) -> ValidationReport:
    """Report step irregularities, negative values and per-channel statistics.

    Never modifies ``table``.
    """
    steps = np.diff(table.timestamps)
    bad = np.flatnonzero(steps != 1)
    step_violations = [(int(i) + 1, int(steps[i])) for i in bad]

    known = ~table.missing_mask
    neg_rows, neg_cols = np.nonzero(known & (np.nan_to_num(table.values) < 0))
    negative = [
        (int(r), table.channels[c], float(table.values[r, c]))
        for r, c in zip(neg_rows, neg_cols)
    ]
    summary = {}
    missing = {}
    for j, ch in enumerate(table.channels):
        col = table.values[known[:, j], j]
        missing[ch] = int(table.missing_mask[:, j].sum())
        if col.size:
            summary[ch] = {"mean": float(col.mean()), "min": float(col.min()), "max": float(col.max())}
        else:
            summary[ch] = {"mean": float("nan"), "min": float("nan"), "max": float("nan")}
    return ValidationReport(len(table), step_violations, negative, missing, summary)


def write_energy_csv(table: RawSeriesTable, path) -> None:
    """Write ``table`` in the same layout :func:`parse_energy_csv` reads."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow((TIMESTAMP_COLUMN,) + CHANNELS)
        for t, row, miss in zip(table.timestamps, table.values, table.missing_mask):
            w.writerow(
                [epoch_hours_to_iso(t)] + ["" if m else repr(float(v)) for v, m in zip(row, miss)]
            )
