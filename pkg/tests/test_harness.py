import csv
import io
import json
import subprocess
import sys

import pytest

from gpsm import cli
from gpsm.harness import SCHEMA_VERSION, SUITES, ConfigError, ExperimentConfig, convergence_table, run

EXPECTED_SUITES = {
    "algebra-selftest", "kernel-residual", "representation", "cauchy-verify", "exterior-verify",
    "plemelj-verify", "pompeiu-verify", "teodorescu-verify", "norm-estimate", "slice-preservation",
}


def test_suite_registry():
    assert set(SUITES) == EXPECTED_SUITES


@pytest.mark.parametrize("kw", [
    {"q": 0}, {"p": -1}, {"res_slice": 1}, {"res_eta": 15}, {"levels": -1}, {"fd_order": 3},
    {"fd_step": -0.1}, {"tol": 0.0}, {"format": "xml"}, {"suites": ("nope",)},
    {"domain": {"kind": "ball", "center": [0.0], "radius": 1.0}},
    {"domain": {"kind": "cone", "center": [0.0, 2.0]}},
])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw)


def test_config_hash_ignores_output_fields():
    a = ExperimentConfig()
    assert a.hash() == a.replace(out="x.jsonl", format="csv", suites=("representation",)).hash()
    assert a.hash() != a.replace(seed=1).hash()


def test_config_roundtrip(tmp_path):
    cfg = ExperimentConfig(p=1, q=2, levels=3, suites=("representation",))
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.from_file(str(path)) == cfg.replace(domain=cfg.domain_spec())
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"bogus": 1})
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(str(path))


def test_report_records_and_formats():
    cfg = ExperimentConfig(p=0, q=1, suites=("representation",))
    report = run(cfg)
    assert report.passed and report.records
    for r in report.records:
        assert r["schema_version"] == SCHEMA_VERSION
        assert r["config_hash"] == cfg.hash()
        assert r["suite"] == "representation"
        assert {"check", "inputs", "measured", "tolerance", "passed", "wall_time"} <= set(r)
    lines = report.to_jsonl().splitlines()
    assert [json.loads(s) for s in lines] == report.records
    rows = list(csv.DictReader(io.StringIO(report.to_csv())))
    assert len(rows) == len(report.records)


def test_suite_exception_becomes_failed_record(monkeypatch):
    def boom(cfg):
        raise RuntimeError("broken")
    monkeypatch.setitem(SUITES, "representation", boom)
    report = run(ExperimentConfig(suites=("representation",)))
    assert not report.passed
    assert "broken" in report.records[0]["measured"]["error"]


def test_tol_override_flows_into_records():
    report = run(ExperimentConfig(p=0, q=2, tol=1e-30, suites=("representation",)))
    assert not report.passed
    assert all(r["tolerance"] == 1e-30 for r in report.records)


def test_convergence_needs_three_levels():
    with pytest.raises(ConfigError):
        convergence_table(ExperimentConfig(), "kernel-residual", [0, 1])


def test_convergence_kernel_residual():
    report = convergence_table(ExperimentConfig(q=1), "kernel-residual", [0, 1, 2])
    assert report.passed
    orders = report.records[0]["measured"]["orders"]
    assert all(abs(o - 2.0) <= 0.3 for o in orders)


def test_cli_suite_pass(capsys):
    code = cli.main(["representation", "--p", "0", "--q", "2"])
    out, err = capsys.readouterr()
    assert code == 0
    assert json.loads(err.strip().splitlines()[-1])["passed"] is True
    assert all(json.loads(s)["passed"] for s in out.splitlines())


def test_cli_tolerance_failure_exit_code(capsys):
    assert cli.main(["representation", "--q", "2", "--tol", "1e-30"]) == 1


@pytest.mark.parametrize("argv", [
    ["representation", "--q", "0"],
    ["representation", "--domain", "disc:0:1"],
    ["representation", "--res-eta", "7"],
    ["unknown-suite"],
    ["run", "--suites", "representation,nope"],
    ["convergence", "kernel-residual", "--refine", "0", "1"],
])
def test_cli_usage_errors(argv, capsys):
    assert cli.main(argv) == 2


def test_cli_empty_selector(capsys):
    assert cli.main(["run", "--suites", ""]) == 0
    out, err = capsys.readouterr()
    assert out == ""
    assert json.loads(err.strip())["records"] == 0


def test_cli_config_file_and_output(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"p": 0, "q": 1, "suites": ["algebra-selftest"], "format": "csv"}))
    out = tmp_path / "r.csv"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert rows and all(r["suite"] == "algebra-selftest" for r in rows)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gpsm", "run", "--suites", ""],
                          capture_output=True, text=True)
    assert proc.returncode == 0
