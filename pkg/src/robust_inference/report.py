"""Table, histogram and manifest writers."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .harness import HistogramData, SweepResult
from .procedures import DISPLAY_NAMES

DECIMALS = {"mse": 3, "min_mse": 3, "re": 3, "pe": 3, "pc": 3, "dprime": 2}

TITLES = {
    "mse": "EXPECTED MEAN-SQUARED ERROR",
    "dprime": "EXPECTED-d' RESULTS",
    "re": "EXPECTED-RE RESULTS",
    "pe": "EXPECTED PROBABILITY OF ERROR",
    "pc": "EXPECTED PROBABILITY OF CORRECT DECISION",
    "min_mse": "MINIMUM POSSIBLE MEAN-SQUARED ERROR",
}

FORMATS = ("csv", "markdown")


class ReportError(RuntimeError):
    pass


def _fmt(x: float, nd: int) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{nd}f}"


def _write(destination: Path, text: str) -> Path:
    destination = Path(destination)
    try:
        destination.parent.mkdir(parents=True, exist_ok=True)
        with open(destination, "w", newline="") as fh:
            fh.write(text)
    except OSError as e:
        raise ReportError(f"cannot write {destination}: {e.strerror or e}") from e
    return destination


def table_csv(result: SweepResult, metric: str) -> str:
    nd = DECIMALS[metric]
    procs = result.procedures
    header = ["error_range"] + list(procs)
    if metric == "mse":
        header.append("min_mse")
    for p in procs:
        header += [f"{p}_full", f"{p}_se", f"{p}_excluded"]
    if metric == "mse":
        header += ["min_mse_full", "min_mse_se"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for i, r in enumerate(result.ranges):
        ests = [result.estimate(metric, i, p) for p in procs]
        row = [f"{r:.3f}"] + [_fmt(e.value, nd) for e in ests]
        floor = result.min_mse(i) if metric == "mse" else None
        if floor is not None:
            row.append(_fmt(floor.value, nd))
        for e in ests:
            row += [repr(float(e.value)), repr(float(e.se)), str(e.excluded)]
        if floor is not None:
            row += [repr(float(floor.value)), repr(float(floor.se))]
        w.writerow(row)
    return buf.getvalue()


def table_markdown(result: SweepResult, metric: str) -> str:
    nd = DECIMALS[metric]
    header = ["Error Range"] + [DISPLAY_NAMES[p] for p in result.procedures]
    if metric == "mse":
        header.append("Minimum Possible")
    rows = []
    for i, r in enumerate(result.ranges):
        row = [f"{r:.3f}"] + [_fmt(result.mean(metric, i, p), nd) for p in result.procedures]
        if metric == "mse":
            row.append(_fmt(result.min_mse(i).value, nd))
        rows.append(row)
    widths = [max(len(h), *(len(row[j]) for row in rows)) for j, h in enumerate(header)]
    lines = [
        f"{TITLES[metric]} ({result.config.scenario}, {result.config.cases} cases)",
        "",
        "| " + " | ".join(h.ljust(w) for h, w in zip(header, widths)) + " |",
        "|" + "|".join("-" * (w + 1) + ":" for w in widths) + "|",
    ]
    for row in rows:
        lines.append("| " + " | ".join(c.rjust(w) for c, w in zip(row, widths)) + " |")
    return "\n".join(lines) + "\n"


def emit_table(result: SweepResult, metric: str, fmt: str, destination) -> Path:
    """Write one results table (rows: error ranges, columns: procedures)."""
    if metric not in DECIMALS:
        raise ValueError(f"unknown metric {metric!r}")
    if fmt == "csv":
        text = table_csv(result, metric)
    elif fmt == "markdown":
        text = table_markdown(result, metric)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return _write(destination, text)


def histogram_csv(data: HistogramData) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_low", "bin_high", "mass_given_H_true", "mass_given_H_false"])
    for lo, hi, mt, mf in zip(data.edges[:-1], data.edges[1:], data.mass_true, data.mass_false):
        w.writerow([f"{lo:.2f}", f"{hi:.2f}", repr(float(mt)), repr(float(mf))])
    return buf.getvalue()


def emit_histograms(data: HistogramData, destination) -> Path:
    return _write(destination, histogram_csv(data))


@dataclass
class RunManifest:
    config: dict
    files: list[str] = field(default_factory=list)
    version: str = __version__
    timestamp: str = ""

    def to_json(self) -> str:
        return json.dumps({
            "tool": "robust-inference",
            "version": self.version,
            "timestamp": self.timestamp,
            "config": self.config,
            "files": sorted(self.files),
        }, indent=2, sort_keys=True) + "\n"

    def write(self, out_dir) -> Path:
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return _write(Path(out_dir) / "manifest.json", self.to_json())
