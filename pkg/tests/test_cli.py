import csv
import io
import json
import shutil
import subprocess

import pytest

from egkcap import cli


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_capacity_csv_shape_and_value(capsys):
    code, out, err = run(["capacity", "--snr-db", "0:10:5", "--fading", "rayleigh"], capsys)
    assert code == 0
    assert "\r" not in out and out.endswith("\n")
    lines = out.splitlines()
    assert lines[0].split(",") == cli.CAPACITY_COLUMNS
    assert len(lines) == 1 + 3
    table = rows(out)
    assert float(table[2]["capacity_bits_per_hz"]) == pytest.approx(2.90, abs=0.02)
    assert table[2]["mc_estimate"] == ""
    assert err == ""


def test_capacity_with_monte_carlo_footer(capsys):
    code, out, err = run(["capacity", "--snr-db", "10", "--branches", "2", "--fading",
                          "nakagami_m(2)", "--mc-samples", "20000", "--seed", "4"], capsys)
    assert code == 0
    (row,) = rows(out)
    cap, mc = float(row["capacity_bits_per_hz"]), float(row["mc_estimate"])
    assert float(row["abs_diff"]) == pytest.approx(abs(cap - mc))
    assert float(row["mc_ci95_low"]) < mc < float(row["mc_ci95_high"])
    assert "rows have the analytic capacity outside" in err


def test_json_round_trip(capsys):
    code, out, _ = run(["capacity", "--snr-db", "5", "--format", "json", "--scheme", "AF",
                        "--branches", "2"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert json.dumps(doc, indent=2) + "\n" == out
    assert doc["rows"][0]["mc_estimate"] is None
    assert doc["scheme"] == "AF_MULTIHOP"


def test_output_file_and_determinism(tmp_path, capsys):
    paths = []
    for w in ("1", "2"):
        p = tmp_path / f"out{w}.csv"
        code, out, _ = run(["capacity", "--snr-db", "0:10:10", "--mc-samples", "5000",
                            "--workers", w, "--output", str(p)], capsys)
        assert code == 0 and out == ""
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"scheme": "EGC", "branches": 2, "snr_db": "0:20:10",
                               "fading": ["rayleigh", "generalized_k(2,3)"]}))
    code, out, _ = run(["capacity", "--config", str(cfg), "--snr-db", "10"], capsys)
    assert code == 0
    assert len(rows(out)) == 1


def test_key_value_fading(capsys):
    code, out, _ = run(["capacity", "--snr-db", "10", "--fading", "m=1,xi=1,m_s=50,xi_s=1"],
                       capsys)
    named = cli.run_to_string(["capacity", "--snr-db", "10", "--fading", "rayleigh"])[1]
    assert code == 0 and out == named


@pytest.mark.parametrize("args", [
    ["capacity", "--scheme", "bogus"],
    ["capacity", "--snr-db", "10:0:1"],
    ["capacity", "--branches", "2", "--fading", "rayleigh", "--fading", "rayleigh",
     "--fading", "rayleigh"],
    ["capacity", "--fading", "m=1,zz=3"],
    ["capacity", "--scheme", "MRC", "--surrogate-order", "4"],
    ["capacity", "--mc-samples", "10"],
    ["capacity", "--nope"],
])
def test_config_errors_exit_2(args, capsys):
    code, _, err = run(args, capsys)
    assert code == 2


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"scheme": "MRC",')
    code, _, err = run(["capacity", "--config", str(cfg)], capsys)
    assert code == 2 and "line" in err
    cfg.write_text('{"colour": 1}')
    code, _, err = run(["capacity", "--config", str(cfg)], capsys)
    assert code == 2 and "colour" in err


def test_numerical_error_names_grid_point(capsys):
    code, _, err = run(["capacity", "--scheme", "CASCADED", "--branches", "2",
                        "--snr-db", "5"], capsys)
    assert code == 3
    assert "snr_db=5" in err


def test_aux_command(capsys):
    code, out, _ = run(["aux", "--scheme", "MRC", "--s", "1"], capsys)
    (row,) = rows(out)
    assert float(row["aux_closed_form"]) == pytest.approx(-0.2193839, abs=1e-7)
    assert float(row["abs_diff"]) < 1e-6
    code, out, _ = run(["aux", "--scheme", "EGC", "--branches", "4", "--s", "1"], capsys)
    assert float(rows(out)[0]["aux_closed_form"]) == pytest.approx(0.8459617, abs=1e-7)
    code, out, _ = run(["aux", "--scheme", "CASCADED", "--branches", "2", "--s", "0.5,2"],
                       capsys)
    assert code == 0
    assert all(r["aux_closed_form"] == "" for r in rows(out))
    code, out, _ = run(["aux", "--scheme", "RMSC", "--branches", "2", "--s", "0.5",
                        "--rmsc-closed-form"], capsys)
    assert float(rows(out)[0]["abs_diff"]) < 1e-10


def test_mgf_command(capsys):
    code, out, _ = run(["mgf", "--p", "1", "--s", "0.3", "--snr-db", "6.98970004336"], capsys)
    (row,) = rows(out)
    assert float(row["mgf"]) == pytest.approx(0.4, rel=0.02)
    assert float(row["mgf_derivative"]) < 0
    assert run(["mgf", "--p", "0", "--s", "1"], capsys)[0] == 2


def test_simulate_command(capsys):
    code, out, _ = run(["simulate", "--scheme", "SC", "--branches", "2", "--snr-db", "10",
                        "--mc-samples", "20000", "--surrogate-order", "8"], capsys)
    (row,) = rows(out)
    assert code == 0
    assert float(row["relative_gap"]) < 0


def test_validate_reports_and_passes(capsys):
    code, out, _ = run(["validate", "--criteria", "6"], capsys)
    assert code == 0
    assert "criterion 6 [PASS]" in out and "s)" in out


def test_validate_tampered_tolerance_fails(capsys):
    code, out, _ = run(["validate", "--criteria", "6", "--tolerance-override",
                        "derivative_rel=1e-14"], capsys)
    assert code == 1
    assert "failed: criterion 6" in out


def test_validate_unknown_tolerance_key(capsys):
    code, _, err = run(["validate", "--tolerance-override", "nonsense=1"], capsys)
    assert code == 2


@pytest.mark.skipif(shutil.which("egkcap") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["egkcap", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "capacity" in res.stdout
