import csv
import json
import subprocess
import sys

import pytest

from kfreechar.cli import ExperimentConfig, main, parse_complex, parse_int, run
from kfreechar.errors import ValidationError


def record(path):
    return json.loads(path.read_text())


def test_verify_identity_example(tmp_path, capsys):
    code = main(["verify-identity", "--k", "2", "--character", "d=-3", "--n", "100000", "--out-dir", str(tmp_path)])
    assert code == 0
    assert "identity holds to 100000" in capsys.readouterr().out
    rec = record(tmp_path / "verify-identity.record.json")
    assert rec["summary"]["identity"] == "identity holds to 100000"
    assert rec["config"]["n"] == 100000 and rec["exit_code"] == 0 and rec["version"]


def test_sums_example_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sums", "--k", "2", "--character", "d=-3", "--x-max", "1e6", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x", "partial_sum", "running_max"]
    assert rows[-1] == ["1000000", "-4", "36"]
    rec = record(tmp_path / "s.record.json")
    assert str(out) in rec["outputs"]


def test_perron_example(tmp_path, capsys):
    code = main(["perron-check", "--k", "2", "--character", "d=-3", "--x", "100.5", "--t", "1e4",
                 "--out-dir", str(tmp_path)])
    line = capsys.readouterr().out.strip()
    assert code == 0
    assert line.startswith("PASS") and "residual=" in line and "bound=" in line
    rec = record(tmp_path / "perron-check.record.json")
    assert rec["summary"]["passed"] and rec["summary"]["residual"] <= 0.1


def test_csv_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["tail-decay", "--s", "0.6+10i", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[0]
    assert header == "y,abs_H,re_H,im_H"
    value = a.read_text().splitlines()[1].split(",")[1]
    assert float(repr(float(value))) == float(value) and len(value) > 10


@pytest.mark.parametrize("argv", [
    ["sums", "--k", "1", "--x-max", "1000"],
    ["sums", "--x-max", "50"],
    ["sums"],
    ["perron-check", "--x", "100", "--t", "100"],
    ["verify-identity", "--n", "100", "--character", "d=4"],
    ["verify-identity", "--n", "abc"],
    ["fit", "--x-max", "1e6", "--window-fraction", "0"],
    ["moments", "--sigma", "0.4", "--t-values", "50"],
    ["ab-split", "--x", "1000", "--y", "2000"],
    ["sums", "--x-max", "1000", "--unknown"],
    ["nonsense"],
])
def test_validation_errors_exit_1(tmp_path, argv):
    assert main(argv + ["--out-dir", str(tmp_path)] if argv[0] != "nonsense" else argv) == 1


def test_computation_errors_exit_2(tmp_path, capsys):
    assert main(["moments", "--t-values", "5000", "--out-dir", str(tmp_path)]) == 2
    rec = record(tmp_path / "moments.record.json")
    assert rec["exit_code"] == 2 and rec["errors"][0]["type"] == "RegionError"
    assert main(["sieve-stats", "--n", "2e8", "--out-dir", str(tmp_path)]) == 2
    assert record(tmp_path / "sieve-stats.record.json")["errors"][0]["type"] == "CapacityError"
    assert "error" in capsys.readouterr().err


def test_config_file_with_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"k": 3, "n": 5000, "character": "d=-4", "out_dir": str(tmp_path)}))
    assert main(["verify-identity", "--config", str(cfg), "--n", "7000"]) == 0
    rec = record(tmp_path / "verify-identity.record.json")
    assert rec["config"]["k"] == 3 and rec["config"]["n"] == 7000 and rec["config"]["character"] == "d=-4"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["verify-identity", "--config", str(cfg), "--n", "10"]) == 1
    cfg.write_text("[1, 2]")
    assert main(["verify-identity", "--config", str(cfg), "--n", "10"]) == 1


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("KFREE_OUTPUT_DIR", str(tmp_path / "envdir"))
    assert main(["sieve-stats", "--n", "1e5"]) == 0
    rec = record(tmp_path / "envdir" / "sieve-stats.record.json")
    assert rec["summary"]["prime_count"] == 9592 and rec["summary"]["kfree_count"] == 60794


def test_all_commands_and_report(tmp_path):
    d = ["--out-dir", str(tmp_path)]
    assert main(["dump-coeffs", "--which", "h", "--n", "100", "--character", "d=5"] + d) == 0
    rows = list(csv.reader((tmp_path / "dump-coeffs.csv").open()))
    assert rows[0] == ["n", "value"] and rows[1] == ["1", "1"]
    assert main(["fit", "--x-max", "1e5"] + d) == 0
    fit = record(tmp_path / "fit.record.json")["summary"]["fit"]
    assert fit["points"] >= 10 and len(fit["window"]) == 2
    assert main(["ab-split", "--x", "1e4", "--k", "3"] + d) == 0
    assert record(tmp_path / "ab-split.record.json")["summary"]["exact"]
    assert main(["moments", "--t-values", "50,100", "--kind", "l-over-s"] + d) == 0
    rows = list(csv.reader((tmp_path / "moments.csv").open()))
    assert rows[0] == ["T", "integral", "ratio"] and len(rows) == 3
    assert main(["report"] + d) == 0
    text = (tmp_path / "report.md").read_text()
    for name in ("dump-coeffs", "fit", "ab-split", "moments"):
        assert f"{name}.record.json" in text


def test_every_dump_kind(tmp_path):
    for which in ("f", "g", "chi", "mu", "kfree", "h", "nu", "psi"):
        out = tmp_path / f"{which}.csv"
        assert main(["dump-coeffs", "--which", which, "--n", "50", "--k", "3", "--out", str(out)]) == 0
        assert out.read_text().startswith("n,value\n")


def test_parsers(tmp_path):
    assert parse_int("1e6") == 10**6 and parse_int("12") == 12
    with pytest.raises(ValidationError):
        parse_int("1.5")
    assert parse_complex("0.6+10i") == 0.6 + 10j
    cfg = ExperimentConfig.build("sums", {"x-max": "1e3"}, {})
    assert cfg.x_max == 1000
    rec = run(ExperimentConfig.build("ab-split", {}, {"x": "2e3", "out_dir": str(tmp_path)}))
    assert rec.summary["exact"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "kfreechar", "sieve-stats", "--n", "1000", "--out-dir", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "pi(1000) = 168" in proc.stdout
