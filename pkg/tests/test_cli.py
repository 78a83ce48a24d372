import csv
import io
import json

import click
import pytest
from click.testing import CliRunner

from robust_inference.cli import main, parse_config, parse_ranges, read_config_file
from robust_inference.harness import ScenarioConfig, emit_histogram_data, run_sweep
from robust_inference.procedures import PROCEDURES
from robust_inference.report import DECIMALS, ReportError, RunManifest, emit_histograms, emit_table, table_markdown


@pytest.fixture(scope="module")
def small_sweep():
    return run_sweep(ScenarioConfig(cases=40, master_seed=3))


def test_parse_config_defaults():
    cfg = parse_config({"scenario": "prototypical", "cases": "1000", "seed": "42"})
    assert cfg.cases == 1000 and cfg.master_seed == 42
    assert cfg.ranges == (0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0)
    assert (cfg.thresholds.lower, cfg.thresholds.upper) == (0.35, 0.65)
    assert cfg.procedures == PROCEDURES


def test_ladder_syntax():
    cfg = parse_config({"ranges": "0:2:0.5", "scenario": "hierarchical"})
    assert cfg.ranges == (0.0, 0.5, 1.0, 1.5, 2.0)
    assert parse_ranges("0:2:0.2")[-1] == 2.0 and len(parse_ranges("0:2:0.2")) == 11
    assert parse_ranges("0.1,0.3") == (0.1, 0.3)


def test_reversed_thresholds_rejected():
    with pytest.raises(click.BadParameter) as err:
        parse_config({"thresholds": "0.7,0.3"})
    assert "--thresholds" in err.value.format_message()
    cfg = parse_config({"thresholds": "0.3,0.7"})
    assert (cfg.thresholds.lower, cfg.thresholds.upper) == (0.3, 0.7)


@pytest.mark.parametrize("flags, flag", [
    ({"cases": "-3"}, "--cases"),
    ({"cases": "many"}, "--cases"),
    ({"ranges": "0:2"}, "--ranges"),
    ({"ranges": "0.4,0.2"}, "--ranges"),
    ({"procedures": "proper_bayes,psychic"}, "--procedures"),
    ({"upper": 0.2}, "--upper"),
])
def test_bad_flags_are_named(flags, flag):
    with pytest.raises(click.BadParameter) as err:
        parse_config(flags)
    assert flag in err.value.format_message()


def test_config_file_with_flag_override(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# sweep settings\nscenario = direct\ncases=12  # small\nseed = 9\nranges = 0:1:0.5\n")
    assert read_config_file(f)["cases"] == "12"
    cfg = parse_config({"cases": "7"}, f)
    assert cfg.scenario == "direct" and cfg.cases == 7 and cfg.master_seed == 9
    assert cfg.ranges == (0.0, 0.5, 1.0)


def test_config_file_rejects_unknown_keys(tmp_path):
    f = tmp_path / "bad.cfg"
    f.write_text("colour = blue\n")
    with pytest.raises(click.UsageError):
        read_config_file(f)


def test_mse_markdown_header(small_sweep):
    md = table_markdown(small_sweep, "mse")
    header = [line for line in md.splitlines() if line.startswith("| Error Range")][0]
    cells = [c.strip() for c in header.strip("|").split("|")]
    assert cells[-1] == "Minimum Possible"
    assert cells[1:6] == ["Simple Linear", "Strong Linear", "Naive Bayes", "Strong Bayes", "Proper Bayes"]


def test_dprime_two_decimals(small_sweep):
    rows = [line for line in table_markdown(small_sweep, "dprime").splitlines() if line.startswith("|  ")]
    assert len(rows) == 11
    for row in rows:
        for cell in row.strip("|").split("|")[1:]:
            assert len(cell.strip().split(".")[1]) == 2


@pytest.mark.parametrize("metric", ["mse", "re", "dprime", "pe", "pc"])
def test_csv_round_trip(small_sweep, metric, tmp_path):
    path = emit_table(small_sweep, metric, "csv", tmp_path / f"{metric}.csv")
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert len(rows) == 11
    tol = 0.5 * 10.0 ** -DECIMALS[metric] + 1e-12
    for i, row in enumerate(rows):
        for p in small_sweep.procedures:
            mean = small_sweep.mean(metric, i, p)
            assert abs(float(row[p]) - mean) <= tol
            assert float(row[f"{p}_full"]) == mean
            assert int(row[f"{p}_excluded"]) >= 0
        if metric == "mse":
            assert abs(float(row["min_mse"]) - small_sweep.min_mse(i).value) <= 5e-4


def test_histogram_file(tmp_path):
    data = emit_histogram_data(ScenarioConfig(cases=30, master_seed=1), 1.0, "proper_bayes")
    path = emit_histograms(data, tmp_path / "h.csv")
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert len(rows) == 20
    assert list(rows[0]) == ["bin_low", "bin_high", "mass_given_H_true", "mass_given_H_false"]
    assert abs(sum(float(r["mass_given_H_true"]) for r in rows) - 1) < 1e-9
    assert abs(sum(float(r["mass_given_H_false"]) for r in rows) - 1) < 1e-9


def test_io_failure_names_destination(small_sweep, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ReportError, match=str(blocker)):
        emit_table(small_sweep, "mse", "csv", blocker / "mse.csv")


def test_manifest_json():
    m = RunManifest({"scenario": "direct"}, ["b.csv", "a.csv"], timestamp="T")
    doc = json.loads(m.to_json())
    assert doc["files"] == ["a.csv", "b.csv"] and doc["config"] == {"scenario": "direct"}


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_simulate_is_byte_stable(tmp_path):
    runner = CliRunner()
    args = ["simulate", "--cases", "15", "--seed", "4", "--ranges", "0:1:0.5"]
    r1 = runner.invoke(main, args + ["--out-dir", str(tmp_path / "a")])
    r2 = runner.invoke(main, args + ["--out-dir", str(tmp_path / "b"), "--workers", "2"])
    assert r1.exit_code == 0, r1.output
    assert r2.exit_code == 0, r2.output
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert a.keys() == b.keys()
    for name in a:
        if name == "manifest.json":
            da, db = json.loads(a[name]), json.loads(b[name])
            da.pop("timestamp"), db.pop("timestamp")
            assert da == db
        else:
            assert a[name] == b[name], name
    manifest = json.loads(a["manifest.json"])
    assert set(manifest["files"]) == set(a) - {"manifest.json"}


def test_manifest_config_reproduces_outputs(tmp_path):
    runner = CliRunner()
    r = runner.invoke(main, ["simulate", "--cases", "10", "--seed", "8", "--scenario", "hierarchical",
                             "--format", "csv", "--out-dir", str(tmp_path / "a")])
    assert r.exit_code == 0, r.output
    cfg = json.loads((tmp_path / "a" / "manifest.json").read_text())["config"]
    lines = [f"scenario = {cfg['scenario']}", f"cases = {cfg['cases']}", f"seed = {cfg['master_seed']}",
             f"ranges = {','.join(map(str, cfg['ranges']))}", "format = csv"]
    (tmp_path / "run.cfg").write_text("\n".join(lines) + "\n")
    r = runner.invoke(main, ["simulate", "--config", str(tmp_path / "run.cfg"), "--out-dir", str(tmp_path / "b")])
    assert r.exit_code == 0, r.output
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert {k: v for k, v in a.items() if k != "manifest.json"} == {k: v for k, v in b.items() if k != "manifest.json"}


def test_outputs_stay_in_out_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("ROBUST_INFERENCE_OUT_DIR", "envdir")
    r = CliRunner().invoke(main, ["histogram", "--range", "0.5", "--cases", "5"])
    assert r.exit_code == 0, r.output
    assert [p.name for p in tmp_path.iterdir()] == ["envdir"]
    names = sorted(p.name for p in (tmp_path / "envdir").iterdir())
    assert names == ["histogram_prototypical_r0.500_proper_bayes.csv",
                     "histogram_prototypical_r0.500_strong_linear.csv", "manifest.json"]


def test_exit_codes(tmp_path):
    runner = CliRunner()
    assert runner.invoke(main, ["simulate", "--thresholds", "0.7,0.3"]).exit_code == 2
    assert runner.invoke(main, ["simulate", "--cases", "0"]).exit_code == 2
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    r = runner.invoke(main, ["simulate", "--cases", "2", "--ranges", "0:0.2:0.2", "--out-dir", str(blocker / "x")])
    assert r.exit_code == 1
    assert str(blocker) in r.output


def test_case_dump():
    r = CliRunner().invoke(main, ["case", "--scenario", "direct", "--range", "0.6", "--case-index", "3"])
    assert r.exit_code == 0, r.output
    doc = json.loads(r.output)
    assert set(doc["relative_belief"]) == set(PROCEDURES)
    assert len(doc["relative_belief"]["proper_bayes"]) == 16
    assert "ATBTCTDT" in doc["true_posterior"]
    assert len(doc["direct_inputs"]["likelihoods"]) == 4
    assert doc["metrics"]["proper_bayes"]["mse"] >= doc["metrics"]["proper_bayes"]["min_mse"]
