"""Command-line front end.

    robust-inference simulate --scenario prototypical --cases 1000 --seed 42
    robust-inference histogram --scenario prototypical --range 1.0
    robust-inference case --scenario direct --range 0.6 --case-index 3

Settings can also come from a ``key=value`` file (``--config``); flags win.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import harness as H
from .metrics import POOLINGS, DecisionThresholds
from .procedures import DROP_MODES
from .report import FORMATS, ReportError, RunManifest, emit_histograms, emit_table

OUT_DIR_ENV = "ROBUST_INFERENCE_OUT_DIR"
TABLE_METRICS = ("mse", "dprime", "re", "pe", "pc")

# config-file key -> flag name, for error messages
_KEYS = {
    "scenario": "--scenario", "cases": "--cases", "ranges": "--ranges", "seed": "--seed",
    "upper": "--upper", "lower": "--lower", "thresholds": "--thresholds",
    "procedures": "--procedures", "format": "--format", "out_dir": "--out-dir",
    "paired_cases": "--paired-cases", "dprime_pooling": "--dprime-pooling",
    "strong_naive_drop": "--strong-naive-drop", "aggregate": "--aggregate",
    "workers": "--workers",
}


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{n}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise click.UsageError(f"{path}:{n}: unknown setting {key!r}")
        out[key] = value
    return out


def parse_ranges(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (stop inclusive) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("expected start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("step must be positive")
        n = int(np.floor((stop - start) / step + 1e-9))
        return tuple(round(start + i * step, 10) for i in range(n + 1))
    return tuple(float(p) for p in text.split(",") if p.strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(flags: dict, config_file=None) -> H.ScenarioConfig:
    """Merge file settings and flags (flags win) into a validated config.

    Raises :class:`click.BadParameter` naming the offending flag.
    """
    values: dict = dict(read_config_file(config_file)) if config_file else {}
    values.update({k: v for k, v in flags.items() if v is not None})

    def bad(key, msg):
        return click.BadParameter(msg, param_hint=f"'{_KEYS.get(key, key)}'")

    kw = {}
    try:
        if "scenario" in values:
            kw["scenario"] = str(values["scenario"])
        if "cases" in values:
            kw["cases"] = int(values["cases"])
    except ValueError as e:
        raise bad("cases", str(e))
    if "ranges" in values:
        try:
            kw["ranges"] = parse_ranges(str(values["ranges"]))
        except ValueError as e:
            raise bad("ranges", str(e))
    if "seed" in values:
        try:
            kw["master_seed"] = int(values["seed"])
        except ValueError as e:
            raise bad("seed", str(e))
    lower, upper = 0.35, 0.65
    if "thresholds" in values:
        try:
            lo, hi = (float(p) for p in str(values["thresholds"]).split(","))
        except ValueError:
            raise bad("thresholds", "expected LOW,HIGH")
        if not lo < hi:
            raise bad("thresholds", f"list the lower threshold first (LOW,HIGH); got {values['thresholds']}")
        lower, upper = lo, hi
    try:
        if "upper" in values:
            upper = float(values["upper"])
        if "lower" in values:
            lower = float(values["lower"])
        kw["thresholds"] = DecisionThresholds(upper=upper, lower=lower)
    except ValueError as e:
        raise bad("upper" if "upper" in values else "lower", str(e))
    if "procedures" in values:
        procs = values["procedures"]
        if isinstance(procs, str):
            procs = [p.strip() for p in procs.split(",") if p.strip()]
        kw["procedures"] = tuple(procs)
    for key, field in (("dprime_pooling", "dprime_pooling"), ("strong_naive_drop", "strong_naive_drop"),
                       ("aggregate", "aggregate")):
        if key in values:
            kw[field] = str(values[key])
    if "paired_cases" in values:
        try:
            kw["paired_cases"] = _bool(values["paired_cases"])
        except ValueError as e:
            raise bad("paired_cases", str(e))
    try:
        return H.ScenarioConfig(**kw)
    except H.ConfigError as e:
        key = "seed" if e.field == "master_seed" else (e.field or "scenario")
        raise bad(key, str(e))


def _common(f):
    opts = [
        click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
                     help="key=value settings file; flags override it."),
        click.option("--scenario", type=click.Choice(H.SCENARIOS), default=None),
        click.option("--cases", type=str, default=None, help="Cases per error range (default 1000)."),
        click.option("--ranges", type=str, default=None, help="start:stop:step, stop inclusive."),
        click.option("--seed", type=str, default=None, help="Master seed (64-bit)."),
        click.option("--upper", type=float, default=None, help="Upper decision threshold U."),
        click.option("--lower", type=float, default=None, help="Lower decision threshold L."),
        click.option("--thresholds", type=str, default=None, help="LOW,HIGH"),
        click.option("--procedures", type=str, default=None, help="Comma list of procedure ids."),
        click.option("--paired-cases/--independent-cases", "paired_cases", default=None,
                     help="Reuse case streams across error ranges."),
        click.option("--dprime-pooling", type=click.Choice(POOLINGS), default=None),
        click.option("--strong-naive-drop", type=click.Choice(DROP_MODES), default=None),
        click.option("--aggregate", type=click.Choice(H.AGGREGATES), default=None,
                     help="rates: RE and d' from mean Pe/Pc (default); cases: mean of per-case values."),
        click.option("--out-dir", type=click.Path(file_okay=False), default=None),
        click.option("--workers", type=int, default=None),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


_CONFIG_FLAGS = ("scenario", "cases", "ranges", "seed", "upper", "lower", "thresholds", "procedures",
                 "paired_cases", "dprime_pooling", "strong_naive_drop", "aggregate")


def _setup(kwargs):
    config_file = kwargs.pop("config_file")
    file_values = read_config_file(config_file) if config_file else {}
    config = parse_config({k: kwargs.get(k) for k in _CONFIG_FLAGS}, config_file)
    out_dir = kwargs.get("out_dir") or file_values.get("out_dir") or os.environ.get(OUT_DIR_ENV) or "results"
    workers = kwargs.get("workers") or int(file_values.get("workers", 1))
    return config, Path(out_dir), workers, file_values


def _fail(e: Exception):
    raise click.ClickException(str(e))


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Robustness of inference procedures under calibration error."""


@main.command()
@_common
@click.option("--format", "fmt", type=click.Choice(FORMATS + ("both",)), default=None)
def simulate(fmt, **kwargs):
    """Run a sweep and write the result tables."""
    config, out_dir, workers, file_values = _setup(kwargs)
    fmt = fmt or file_values.get("format", "both")
    if fmt not in FORMATS + ("both",):
        raise click.BadParameter(f"unknown format {fmt!r}", param_hint="'--format'")
    formats = FORMATS if fmt == "both" else (fmt,)
    try:
        result = H.run_sweep(config, workers=workers)
        files = []
        for metric in TABLE_METRICS:
            for f in formats:
                name = f"{config.scenario}_{metric}.{'csv' if f == 'csv' else 'md'}"
                emit_table(result, metric, f, out_dir / name)
                files.append(name)
        RunManifest(config.echo(), files).write(out_dir)
    except (ReportError, OSError) as e:
        _fail(e)
    if "markdown" in formats:
        for metric in ("mse", "dprime", "re"):
            click.echo((out_dir / f"{config.scenario}_{metric}.md").read_text())
    click.echo(f"wrote {len(files)} files to {out_dir}")


@main.command()
@_common
@click.option("--range", "error_range", type=float, required=True, help="Error range to histogram.")
def histogram(error_range, **kwargs):
    """Write RB histograms (bin width 0.05) under H=T and H=F."""
    procs_given = kwargs.get("procedures")
    config, out_dir, _, _ = _setup(kwargs)
    procs = config.procedures if procs_given else ("strong_linear", "proper_bayes")
    files = []
    try:
        for p in procs:
            data = H.emit_histogram_data(config, error_range, p)
            name = f"histogram_{config.scenario}_r{error_range:.3f}_{p}.csv"
            emit_histograms(data, out_dir / name)
            files.append(name)
        echo = config.echo() | {"histogram_range": error_range, "histogram_procedures": list(procs)}
        RunManifest(echo, files).write(out_dir)
    except (ReportError, OSError) as e:
        _fail(e)
    click.echo(f"wrote {len(files)} files to {out_dir}")


@main.command()
@_common
@click.option("--range", "error_range", type=float, required=True)
@click.option("--case-index", type=int, default=0, show_default=True)
def case(error_range, case_index, **kwargs):
    """Dump one case's inputs, RB tables and metrics as JSON on stdout."""
    config, _, _, _ = _setup(kwargs)
    if error_range < 0:
        raise click.BadParameter("must be nonnegative", param_hint="'--range'")
    out = H.evaluate_case(config, error_range, case_index)
    topo = config.topology
    states = ["".join(f"{k}{'T' if v else 'F'}" for k, v in s.items()) for s in topo.evidential_states()]
    doc = {
        "config": config.echo(),
        "error_range": error_range,
        "case_index": case_index,
        "true_chain": out.truth.values.tolist(),
        "belief_chain": out.belief.chain.values.tolist(),
        "true_posterior": dict(zip(states, out.truth_joint.posterior_table().tolist())),
        "relative_belief": {p: dict(zip(states, t.rb.tolist())) for p, t in out.tables.items()},
        "metrics": {p: r.as_dict() for p, r in out.records.items()},
    }
    if out.belief.direct is not None:
        doc["direct_inputs"] = {"prior": out.belief.direct.prior,
                                "likelihoods": np.asarray(out.belief.direct.likelihoods).tolist()}
    click.echo(json.dumps(doc, indent=2))


if __name__ == "__main__":
    sys.exit(main())
