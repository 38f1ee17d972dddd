import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from elmcast.ingest import RawSeriesTable  # noqa: E402

# 2018-01-01T00:00Z in epoch hours
T0 = 420768


def make_sinusoid_table(L=2000, noise=0.01, seed=0, start=T0):
    """Seven daily sinusoids with distinct phases, offsets and amplitudes.

    ``noise`` is the Gaussian noise std relative to each channel's amplitude.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(L)
    amp = np.array([100.0, 50.0, 30.0, 40.0, 10.0, 5.0, 20.0])
    off = np.array([300.0, 150.0, 60.0, 50.0, 12.0, 10.0, 40.0])
    phase = np.linspace(0.0, 2.0, 7)
    clean = off + amp * np.sin(2 * np.pi * t[:, None] / 24 + phase)
    vals = clean + noise * amp * rng.standard_normal((L, 7))
    return RawSeriesTable(start + t, vals, np.zeros((L, 7), dtype=bool))


@pytest.fixture
def sinusoid_table():
    return make_sinusoid_table()


@pytest.fixture
def write_csv(tmp_path):
    def _write(text, name="data.csv"):
        p = tmp_path / name
        p.write_text(text)
        return p
    return _write


HEADER = "timestamp,total,thermal,hydraulic,solar,wind,bioenergy,imported\n"


# ---- one pass/fail line per acceptance criterion in the terminal summary ----

_acceptance = {}


def pytest_itemcollected(item):
    m = item.get_closest_marker("criterion")
    if m is not None:
        item.user_properties.append(("criterion", m.args[0]))
        item.user_properties.append(("title", m.args[1]))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    crit = props.get("criterion")
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = report.outcome
        if hasattr(report, "wasxfail"):
            outcome, reason = "xfailed", f"expected failure: {report.wasxfail}"
        elif report.skipped and isinstance(report.longrepr, tuple):
            reason = report.longrepr[2]
        else:
            reason = ""
        _acceptance.setdefault(crit, []).append((outcome, props.get("title", ""), reason))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_acceptance):
        results = _acceptance[crit]
        outcomes = {r[0] for r in results}
        if "failed" in outcomes:
            tag = "FAIL"
        elif outcomes == {"skipped"}:
            tag = "SKIP"
        elif outcomes - {"passed"}:
            tag = "PARTIAL"
        else:
            tag = "PASS"
        title = results[0][1]
        n_ok = sum(r[0] == "passed" for r in results)
        line = f"[{tag}] criterion {crit}: {title} ({n_ok}/{len(results)} checks passed)"
        reasons = {r[2] for r in results if r[2]}
        if reasons:
            line += " - " + "; ".join(sorted(reasons))
        tr.write_line(line)


def dataset_path():
    p = os.environ.get("ELMCAST_DATA")
    return Path(p) if p else None
