import subprocess
import sys

from ibf import cli


def test_experiment_to_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("experiment = fpr-sweep\nm = 64\nn = 4\nk = 3\ntrials = 3\ntest_size = 100\n")
    out = tmp_path / "out.csv"
    assert cli.main(["fpr-sweep", "--config", str(cfg), "--out", str(out), "--seed", "5"]) == 0
    first = out.read_bytes()
    assert first.startswith(b"experiment,m,n")
    assert cli.main(["fpr-sweep", "--config", str(cfg), "--out", str(out), "--seed", "5"]) == 0
    assert out.read_bytes() == first
    assert cli.main(["fpr-sweep", "--config", str(cfg), "--trials", "2"]) == 0
    assert ",2,\n" in capsys.readouterr().out


def test_errors_are_reported(tmp_path, capsys):
    assert cli.main(["fpr-sweep", "--config", str(tmp_path / "none.cfg")]) != 0
    bad = tmp_path / "bad.cfg"
    bad.write_text("experiment = secure-eval\n")
    assert cli.main(["fpr-sweep", "--config", str(bad)]) != 0
    assert "ibf: error" in capsys.readouterr().err


def test_sign_and_verify(tmp_path, capsys):
    args = ["--secret", "a1b2", "-m", "256", "-k", "4"]
    assert cli.main(["sign", *args, "--packet", "c0ffee", "--epoch", "3", "alpha", "beta"]) == 0
    trace = tmp_path / "trace.txt"
    trace.write_text("# captured\n" + capsys.readouterr().out)
    assert cli.main(["verify", *args, "--trace", str(trace), "--epoch", "4"]) == 0
    assert capsys.readouterr().out.split() == ["2", "alpha", "accept", "2", "beta", "accept"]
    assert cli.main(["verify", *args, "--trace", str(trace), "--epoch", "5"]) == 0
    assert capsys.readouterr().out.count("reject") == 2


def test_malformed_trace(tmp_path, capsys):
    trace = tmp_path / "t.txt"
    trace.write_text("zz nothex 1 a\n")
    assert cli.main(["verify", "--secret", "00", "--trace", str(trace)]) != 0
    assert "malformed" in capsys.readouterr().err


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "ibf.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "tables" in proc.stdout


def test_tables_subset(tmp_path, monkeypatch, capsys):
    from ibf import harness

    monkeypatch.setattr(harness, "bundled_configs", lambda: ["table2_secure.cfg"])
    assert cli.main(["tables", "--out-dir", str(tmp_path), "--trials", "2"]) == 0
    assert (tmp_path / "table2_secure.csv").exists()
