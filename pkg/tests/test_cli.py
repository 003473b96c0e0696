import json
import re

import pytest

from polylog_lab import lognum
from polylog_lab.cli import EXIT_CONDITION, EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, RunConfig, main
from polylog_lab.construction import save_snapshot


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def cert(tmp_path, capsys):
    path = tmp_path / "seq.cert"
    code, out, _ = run(capsys, "--out-dir", str(tmp_path), "sequence", "gen", "--mode", "certified",
                       "--len", "2", "--output", str(path))
    assert code == EXIT_OK
    return path


def test_threshold_table(capsys):
    code, out, _ = run(capsys, "threshold", "--r", "2", "--a", "0.5")
    assert code == EXIT_OK
    row = out.strip().splitlines()[-1].split()
    assert row[:2] == ["2", "0.5"] and float(row[2]) == pytest.approx(1.2, abs=1e-12)


def test_threshold_stm_column(capsys):
    code, out, _ = run(capsys, "threshold", "--r", "2", "--a", "0.5", "--alpha", "0.5", "--beta", "0.5")
    assert code == EXIT_OK
    assert float(out.strip().splitlines()[-1].split()[-1]) == pytest.approx(1.2, abs=1e-12)


def test_threshold_rejects_r_at_most_one(capsys):
    code, _, err = run(capsys, "threshold", "--r", "1", "--a", "0.5")
    assert code == EXIT_USAGE and "usage error" in err


def test_info(capsys):
    code, out, _ = run(capsys, "info")
    assert code == EXIT_OK
    assert "p* = 1.2" in out and "L3" in out


def test_bad_arguments_exit_usage(capsys):
    assert run(capsys, "nonsense")[0] == EXIT_USAGE
    assert run(capsys, "threshold", "--r", "abc")[0] == EXIT_USAGE


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[params]\nr = 2\nbogus = 1\n")
    code, _, err = run(capsys, "--config", str(cfg), "info")
    assert code == EXIT_USAGE and "params.bogus" in err
    cfg.write_text("[nowhere]\nx = 1\n")
    assert run(capsys, "--config", str(cfg), "info")[0] == EXIT_USAGE


def test_missing_config_is_io(tmp_path, capsys):
    assert run(capsys, "--config", str(tmp_path / "absent.ini"), "info")[0] == EXIT_IO


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[params]\nr = 3\na = 0.1\n")
    code, out, _ = run(capsys, "--config", str(cfg), "threshold")
    assert float(out.strip().splitlines()[-1].split()[-1]) == pytest.approx(1 + 2 / 4.6, abs=1e-7)
    code, out, _ = run(capsys, "--config", str(cfg), "threshold", "--r", "2", "--a", "0.5")
    assert float(out.strip().splitlines()[-1].split()[-1]) == pytest.approx(1.2)


def test_config_fingerprint_ignores_output():
    a = RunConfig()
    b = RunConfig()
    b.set("output", "dir", "/elsewhere")
    assert a.fingerprint() == b.fingerprint()
    b.set("params", "r", "3")
    assert a.fingerprint() != b.fingerprint()


def test_certificate_round_trip(cert, tmp_path, capsys):
    code, out, _ = run(capsys, "sequence", "check", "--certificate", str(cert))
    assert code == EXIT_OK
    assert out.count("pass") == 15
    cfgs = list(tmp_path.glob("sequence.config.ini"))
    assert cfgs and "fingerprint" in cfgs[0].read_text()


def test_edited_certificate_fails_L2(cert, capsys):
    text = cert.read_text()
    ee = lognum.to_exact_string(lognum.lt_exp(lognum.lt_exp(lognum.lt_from_real(1))))
    text = re.sub(r"(?m)^q1 = .*$", f"q1 = {ee}", text)
    cert.write_text(text)
    code, out, err = run(capsys, "sequence", "check", "--certificate", str(cert))
    assert code == EXIT_CONDITION
    assert re.search(r"L2 FAIL", out) and "L2" in err


def test_corrupt_certificate_is_io(tmp_path, capsys):
    bad = tmp_path / "bad.cert"
    bad.write_text("[certificate]\nformat_version = 1\n")
    assert run(capsys, "sequence", "check", "--certificate", str(bad))[0] == EXIT_IO
    assert run(capsys, "sequence", "check", "--certificate", str(tmp_path / "none"))[0] == EXIT_IO


def test_desk_sequence_gen(tmp_path, capsys):
    code, out, err = run(capsys, "--out-dir", str(tmp_path), "sequence", "gen", "--mode", "desk",
                         "--count", "1", "--q1", "1e6")
    assert code == EXIT_OK
    assert "desk mode" in out
    code, out, _ = run(capsys, "sequence", "check", "--certificate", str(tmp_path / "sequence.cert"))
    assert "desk mode" in out


def test_small_q1_warns(tmp_path, capsys):
    code, _, err = run(capsys, "--out-dir", str(tmp_path), "sequence", "gen", "--mode", "desk",
                       "--count", "1", "--q1", "1e3")
    assert "warning" in err


def test_nyquist_exit(tmp_path, capsys):
    code, _, err = run(capsys, "--out-dir", str(tmp_path), "measure", "build", "--m", "1", "--K", "4096",
                       "--samples", "8")
    assert code == EXIT_NUMERIC and "numerical tolerance" in err


def test_measure_and_analyze(tmp_path, capsys):
    code, out, _ = run(capsys, "--out-dir", str(tmp_path), "measure", "build", "--m", "1", "--K", "4096")
    assert code == EXIT_OK
    snap = tmp_path / "measure_m1.snap"
    assert snap.exists()
    code, out, _ = run(capsys, "--out-dir", str(tmp_path), "analyze", "decay", "--snapshot", str(snap))
    assert code == EXIT_OK and "ratio" in out
    summary = json.loads((tmp_path / "analyze_decay.txt").read_text())
    assert summary["format_version"] == 1 and "ratio" in summary
    csv = (tmp_path / "analyze_decay.csv").read_text().splitlines()
    assert csv[0].startswith("# format_version=1") and csv[1] == "k,abs_coeff,envelope_product"
    code, out, _ = run(capsys, "--out-dir", str(tmp_path), "analyze", "frostman", "--snapshot", str(snap))
    assert code == EXIT_OK and "max/median" in out


def test_analyze_needs_snapshot(capsys):
    assert run(capsys, "analyze", "decay")[0] == EXIT_USAGE


def test_analyze_divisor(tmp_path, capsys):
    code, out, _ = run(capsys, "--out-dir", str(tmp_path), "analyze", "divisor", "--q", "1e6", "--kmax", "20000")
    assert code == EXIT_OK and "violations=0" in out


def test_corrupt_snapshot_is_io(tmp_path, capsys, snap0):
    path = tmp_path / "s.snap"
    save_snapshot(snap0, path)
    data = bytearray(path.read_bytes())
    data[-20] ^= 0xFF
    path.write_bytes(bytes(data))
    assert run(capsys, "--out-dir", str(tmp_path), "analyze", "decay", "--snapshot", str(path))[0] == EXIT_IO
    assert run(capsys, "analyze", "decay", "--snapshot", str(tmp_path / "missing.snap"))[0] == EXIT_IO


def test_restrict_sweep_byte_identical(tmp_path, capsys, snap1):
    snap = tmp_path / "m1.snap"
    save_snapshot(snap1, snap)
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        code, out, _ = run(capsys, "--out-dir", str(d), "--seed", "4", "restrict", "sweep", "--snapshot", str(snap),
                           "--p-grid", "1.0,1.1,2.0", "--deltas", "2^-4:2^-6", "--centres", "2")
        assert code == EXIT_OK
        outs.append(((d / "restrict_sweep.csv").read_bytes(), (d / "restrict_sweep.txt").read_bytes()))
    assert outs[0] == outs[1]
    assert b"reported only" in outs[0][1]
