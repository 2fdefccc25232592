import csv
import json
import subprocess
import sys

import pytest

from wpdirac.cli import ConfigError, RunConfig, main, read_config_file

BASE = ["--parity", "even", "--m", "1", "--a", "1", "--lambda-q", "1"]


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_evolve_example(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = main(["--mode", "evolve_einstein", *BASE, "--t-end", "0.5", "--step", "1e-4", "--out", str(out)])
    assert code == 0
    table = rows(out)
    assert table[0][:3] == ["t", "f", "f_t"]
    ch = [abs(float(r[table[0].index("C_H")])) for r in table[1:]]
    assert max(ch) <= 1e-8
    assert float(table[-1][0]) == 0.5
    report = json.loads((tmp_path / "run.report.json").read_text())
    assert report["residuals"]["pass"] is True
    line = capsys.readouterr().out.strip()
    assert "ReachedEnd" in line and "PASS" in line and "window=0.5" in line


def test_closed_form_example(tmp_path):
    out = tmp_path / "cf.csv"
    assert main(["--mode", "closed_form", *BASE[:6], "--c", "1", "--t-end", "3", "--step", "0.01", "--out", str(out)]) == 0
    table = rows(out)
    assert table[0] == ["t", "f", "f_t", "f_tt", "S"]
    assert float(table[1][4]) == -0.5
    assert float(table[-1][0]) == 3.0 and float(table[-1][1]) == pytest.approx(3.0)


def test_closed_form_domain_exit(tmp_path):
    out = tmp_path / "cf.csv"
    code = main(["--mode", "closed_form", "--m", "2", "--a", "0", "--c", "-1", "--t-end", "2", "--step", "0.01", "--out", str(out)])
    assert code == 3
    assert float(rows(out)[-1][0]) < 1.0


def test_verify_detects_corruption(tmp_path, capsys):
    out = tmp_path / "run.csv"
    main(["--mode", "evolve_einstein", *BASE, "--t-end", "0.2", "--step", "1e-3", "--out", str(out)])
    table = rows(out)
    i = table[0].index("f_t")
    for r in table[1:]:
        r[i] = repr(float(r[i]) * 1.01)
    bad = tmp_path / "bad.csv"
    with open(bad, "w", newline="") as fh:
        csv.writer(fh).writerows(table)
    capsys.readouterr()
    assert main(["--mode", "verify", "--input", str(bad), *BASE, "--out", str(tmp_path / "v.csv")]) == 1
    line = capsys.readouterr().out
    assert "FAIL" in line
    report = json.loads((tmp_path / "v.report.json").read_text())
    assert report["residuals"]["hamiltonian"] > 1e-4
    assert main(["--mode", "verify", "--input", str(out), *BASE, "--out", str(tmp_path / "v.csv")]) == 0


def test_verify_json_uses_embedded_params(tmp_path):
    out = tmp_path / "run.json"
    args = ["--mode", "evolve_einstein", "--parity", "odd", "--m", "2", "--lambda-m", "0.5", "--lambda-q", "0.5"]
    assert main([*args, "--t-end", "0.2", "--step", "1e-3", "--format", "json", "--out", str(out)]) == 0
    assert main(["--mode", "verify", "--input", str(out), "--out", str(tmp_path / "v.json")]) == 0


def test_invalid_input_exit_codes(tmp_path):
    out = str(tmp_path / "x.csv")
    assert main(["--mode", "evolve_einstein", "--parity", "odd", "--m", "1", "--out", out]) == 2
    assert main(["--mode", "evolve_einstein", *BASE, "--epsilon", "-1", "--out", out]) == 2
    assert main(["--mode", "evolve_wk", *BASE, "--out", out]) == 2  # needs c
    assert main(["--mode", "evolve_wk", *BASE, "--lambda-m", "1", "--c", "1", "--out", out]) == 2
    assert main(["--mode", "evolve_einstein", *BASE, "--step", "0", "--out", out]) == 2
    assert main(["--mode", "verify", "--input", str(tmp_path / "missing.csv"), *BASE, "--out", out]) == 2


def test_blow_up_exit_code_keeps_prefix(tmp_path):
    out = tmp_path / "b.csv"
    args = ["--mode", "evolve_einstein", "--m", "1", "--a", "3", "--lambda-m", "1", "--lambda-q", "1"]
    assert main([*args, "--t-end", "5", "--step", "1e-3", "--out", str(out)]) == 3
    table = rows(out)
    assert 1 < len(table) and float(table[-1][0]) < 5
    report = json.loads((tmp_path / "b.report.json").read_text())
    assert report["termination"].startswith("BlowUp(")


def test_wk_mode(tmp_path):
    out = tmp_path / "wk.csv"
    args = ["--mode", "evolve_wk", "--parity", "odd", "--m", "2", "--a", "1.5", "--lambda-q", "1", "--c", "1"]
    assert main([*args, "--t-end", "0.5", "--step", "1e-3", "--out", str(out)]) == 0


def test_reparam_mode(tmp_path, capsys):
    out = tmp_path / "g.csv"
    args = ["--mode", "reparam", "--m", "2", "--a", "1", "--lambda-m", "0.5", "--lambda-q", "1"]
    assert main([*args, "--t-end", "0.5", "--step", "1e-3", "--s-count", "50", "--out", str(out)]) == 0
    table = rows(out)
    assert table[0][:3] == ["s", "lapse", "t"]
    assert len(table) == 51
    assert "omega=0.4" in capsys.readouterr().out


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# odd Killing run\n"
        "mode = evolve_einstein\n"
        "parity = odd\n"
        "m = 2\n"
        "lambda_m = 0.5\n"
        "lambda_q = -1   # trailing comment\n"
        "epsilon = -1\n"
        "t_end = 0.2\n"
        "step = 0.01\n"
        f"out = {tmp_path / 'from_file.csv'}\n"
    )
    values = read_config_file(cfg)
    assert values["lambda_q"] == "-1"
    out = tmp_path / "flag.csv"
    assert main(["--config", str(cfg), "--step", "1e-3", "--out", str(out)]) == 0
    assert not (tmp_path / "from_file.csv").exists()
    assert float(rows(out)[2][0]) == pytest.approx(1e-3)


def test_config_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("mode = evolve_einstein\ncolour = blue\n")
    assert main(["--config", str(cfg)]) == 2
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"mode": "nope"})


def test_deterministic_output(tmp_path):
    args = ["--mode", "evolve_einstein", *BASE, "--lambda-m", "0.5", "--t-end", "0.3", "--step", "1e-3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main([*args, "--out", str(a)])
    main([*args, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_console_entry_point(tmp_path):
    out = tmp_path / "e.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "wpdirac.cli", "--mode", "evolve_einstein", *BASE, "--t-end", "0.1", "--step", "1e-3", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "PASS" in proc.stdout
