from __future__ import annotations

import csv
import json

import pytest

from ruelle import io
from ruelle.cli import main

CAT = "[[2,1],[1,1]]"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_resonances_pa_happy_path(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    assert run(capsys, "spectrum", CAT, "--out", spec)[0] == 0
    out = tmp_path / "r.json"
    assert run(capsys, "resonances", "pa", "--spectrum", spec, "--jmax", 3, "--out", out)[0] == 0
    data = json.loads(out.read_text())
    assert data["schema"] == "ruelle.resonances/1"
    assert (tmp_path / "r.manifest.json").exists()


def test_unknown_kind_is_usage_error(capsys):
    code, _, err = run(capsys, "resonances", "bogus")
    assert code == 2
    assert json.loads(err)["exit_code"] == 2


def test_not_hyperbolic_is_numeric_failure(capsys):
    code, _, err = run(capsys, "spectrum", "[[1,1],[0,1]]")
    assert code == 3
    assert json.loads(err)["error"] == "NotHyperbolic"


def test_not_symplectic_is_usage_error(capsys):
    assert run(capsys, "spectrum", "[[2,0],[0,1]]")[0] == 2


def test_range_validation(capsys):
    assert run(capsys, "resonances", "transfer-heisenberg", "--kmax", -1)[0] == 2


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"schema": io.CONFIG_SCHEMA, "jmax": 2, "bogus": 1}))
    assert run(capsys, "resonances", "pa", "--matrix", CAT, "--config", cfg)[0] == 2


def test_config_layered_under_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"schema": io.CONFIG_SCHEMA, "kmax": 1}))
    _, out_cfg, _ = run(capsys, "resonances", "transfer-heisenberg", "--config", cfg)
    _, out_flag, _ = run(capsys, "resonances", "transfer-heisenberg", "--config", cfg, "--kmax", 3)
    assert len(json.loads(out_cfg)["entries"]) < len(json.loads(out_flag)["entries"])


def test_same_config_twice_is_byte_identical(tmp_path, capsys):
    outputs = []
    for name in ("a", "b"):
        path = tmp_path / f"{name}.csv"
        assert run(capsys, "correlate", "torus", "--N", 15, "--seed", 4, "--out", path)[0] == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]


def test_manifest_checksum_matches(tmp_path, capsys):
    path = tmp_path / "res.json"
    assert run(capsys, "resonances", "heisenberg", "--lambda", 2, "--out", path)[0] == 0
    manifest = json.loads((tmp_path / "res.manifest.json").read_text())
    assert manifest["schema"] == io.MANIFEST_SCHEMA
    assert manifest["files"]["res.json"] == io.sha256_of(path)
    assert manifest["config"]["lam"] == 2.0
    assert {"python", "numpy", "ruelle"} <= set(manifest["versions"])


def test_csv_rows_equal_series_length(tmp_path, capsys):
    path = tmp_path / "c.csv"
    assert run(capsys, "correlate", "torus", "--N", 20, "--seed", 1, "--out", path)[0] == 0
    rows = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    table = list(csv.DictReader(rows))
    assert len(table) == 21
    assert [int(r["n"]) for r in table] == list(range(21))


def test_format_both_writes_two_files(tmp_path, capsys):
    base = tmp_path / "series"
    assert run(capsys, "correlate", "torus", "--N", 5, "--seed", 0, "--out", base, "--format", "both")[0] == 0
    assert (tmp_path / "series.json").exists() and (tmp_path / "series.csv").exists()


def test_correlate_then_fit(tmp_path, capsys):
    series = tmp_path / "h.csv"
    assert run(capsys, "correlate", "heisenberg", "--lambda", 2, "--N", 25, "--out", series)[0] == 0
    predicted = tmp_path / "pred.json"
    assert run(capsys, "resonances", "heisenberg", "--lambda", 2, "--zmax", 1, "--kmax", 2,
               "--out", predicted)[0] == 0
    report = tmp_path / "fit.json"
    code, out, _ = run(capsys, "fit", series, "--depth", 2, "--predicted", predicted, "--out", report)
    assert code == 0
    assert "rate" in out  # human-readable summary table
    data = json.loads(report.read_text())
    assert data["terms"][0]["rate"] == pytest.approx(2 ** -0.5, rel=1e-6)
    assert "match" in data


def test_fit_rejects_malformed_csv(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert run(capsys, "fit", bad)[0] == 2


def test_missing_input_file_is_usage_error(tmp_path, capsys):
    assert run(capsys, "fit", tmp_path / "nope.csv")[0] in (2, 3)


@pytest.mark.parametrize("suite", ["toral", "enum", "spectrum"])
def test_verify_suites_pass(suite, capsys):
    code, out, err = run(capsys, "verify", suite)
    assert code == 0, err
    assert all(c["passed"] for c in json.loads(out)["checks"])


def test_verify_heisenberg_reports_failures_with_exit_1(capsys):
    # the listed second rate lam^(-3/2) is not carried by the even Gaussian series
    code, out, err = run(capsys, "verify", "heisenberg", "--lambda", 2)
    assert code == 1
    failed = [c["name"] for c in json.loads(out)["checks"] if not c["passed"]]
    assert failed == ["Gaussian second rate vs lam^(-3/2) as listed"]
    assert "[FAIL]" in err


def test_deviation(tmp_path, capsys):
    kz = tmp_path / "kz.json"
    kz.write_text(json.dumps({"genus": 2, "exponents": [0.5]}))
    code, out, _ = run(capsys, "deviation", "--kz", kz, "--level", 1)
    assert code == 0
    assert "exponent" in json.loads(out)
