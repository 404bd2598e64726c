import csv
import json
import re

import pytest

from cfo_scheme.cli import HISTOGRAM_COLUMNS, SWEEP_COLUMNS, main


def run(argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def hist_args(out, trials=20_000, **extra):
    args = ["histogram", "--estimator", "preamble", "--snr-db", 14.2635, "--cfo-hz", 500,
            "--trials", trials, "--seed", 7, "--out", out]
    for k, v in extra.items():
        args += [f"--{k.replace('_', '-')}", v]
    return args


def test_histogram_counts(tmp_path, capsys):
    out = tmp_path / "h.csv"
    assert run(hist_args(out)) == 0
    rows = read_rows(out)
    assert list(rows[0]) == HISTOGRAM_COLUMNS
    assert sum(int(r["count"]) for r in rows) == 20_000
    assert "model std" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "h.manifest.json").read_text())
    assert manifest["subcommand"] == "histogram" and manifest["seed"] == 7
    assert manifest["params"]["trials"] == 20_000


def test_histogram_deterministic_and_replayable(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(hist_args(a, trials=2000)) == 0
    assert run(hist_args(b, trials=2000)) == 0
    assert a.read_bytes() == b.read_bytes()
    original = a.read_bytes()
    a.unlink()
    assert run(["replay", tmp_path / "a.manifest.json"]) == 0
    assert a.read_bytes() == original


@pytest.mark.parametrize("estimator", ["cp", "pilot"])
def test_histogram_other_estimators(tmp_path, estimator):
    out = tmp_path / "h.csv"
    argv = ["histogram", "--estimator", estimator, "--snr-db", 15, "--cfo-hz", 100, "--trials", 300,
            "--seed", 1, "--out", out]
    assert run(argv) == 0
    assert sum(int(r["count"]) for r in read_rows(out)) == 300


def test_histogram_missing_out_is_usage_error(tmp_path, capsys):
    argv = hist_args(tmp_path / "x.csv")
    i = argv.index("--out")
    assert run(argv[:i] + argv[i + 2:]) == 2
    assert "usage" in capsys.readouterr().err


def test_bad_numerology_is_usage_error(tmp_path):
    assert run(hist_args(tmp_path / "x.csv", n_fft=100)) == 2
    assert run(hist_args(tmp_path / "x.csv", cp_len=500)) == 2


def test_runtime_error_exit_code(tmp_path, capsys):
    assert run(hist_args(tmp_path / "missing" / "x.csv", trials=200)) == 1
    assert "error" in capsys.readouterr().err
    # too few trials for a histogram
    assert run(hist_args(tmp_path / "y.csv", trials=50)) == 1


def test_criterion_solve(capsys):
    assert run(["criterion", "--pe", 0.1, "--delta-fmax-hz", 300, "--delta-t-us", 71.429, "--solve-min-snr"]) == 0
    a = float(re.search(r"min effective SNR: ([\d.]+) dB", capsys.readouterr().out).group(1))
    assert run(["criterion", "--pe", 0.1, "--delta-fmax-hz", 300, "--delta-t-us", 285.716, "--solve-min-snr"]) == 0
    b = float(re.search(r"min effective SNR: ([\d.]+) dB", capsys.readouterr().out).group(1))
    assert a == pytest.approx(21.8, abs=0.1)
    assert b == pytest.approx(9.9, abs=0.1)


def test_criterion_grid_output(tmp_path):
    out = tmp_path / "c.csv"
    argv = ["criterion", "--pe", 0.1, "--delta-fmax-hz", 300, "--delta-t-us", 71.429,
            "--snr-db-grid", "20:24:1", "--out", out]
    assert run(argv) == 0
    rows = read_rows(out)
    assert [r["meets_target"] for r in rows] == ["0", "0", "1", "1", "1"]


@pytest.mark.parametrize("pe", [1.5, 0, -0.2])
def test_criterion_bad_probability(pe, capsys):
    assert run(["criterion", "--pe", pe, "--delta-fmax-hz", 300, "--delta-t-us", 71.4, "--solve-min-snr"]) == 2
    assert "usage" in capsys.readouterr().err


def test_bad_grid_is_usage_error(tmp_path):
    argv = ["sweep", "--mode", "two_step", "--cfo-hz", 700, "--snr-db-grid", "0:20:0",
            "--trials", 5, "--seed", 1, "--out", tmp_path / "s.csv"]
    assert run(argv) == 2


def sweep(tmp_path, mode, name):
    out = tmp_path / name
    argv = ["sweep", "--mode", mode, "--cfo-hz", 700, "--snr-db-grid", "0:20:2",
            "--trials", 8, "--seed", 3, "--out", out]
    assert run(argv) == 0
    return out


def test_sweep_rows_and_schema(tmp_path):
    rows = read_rows(sweep(tmp_path, "two_step", "s.csv"))
    assert len(rows) == 11
    assert list(rows[0]) == SWEEP_COLUMNS
    for r in rows:
        assert 0.0 <= float(r["decode_rate"]) <= 1.0
        assert float(r["ci_lo"]) <= float(r["decode_rate"]) <= float(r["ci_hi"])
        assert r["mode"] == "two_step"


def test_sweep_schema_stable_across_modes(tmp_path):
    heads = {
        m: (sweep(tmp_path, m, f"{m}.csv").read_text().splitlines()[0])
        for m in ("two_step", "coarse_only", "residual_only")
    }
    assert len(set(heads.values())) == 1


def test_sweep_replay(tmp_path):
    out = sweep(tmp_path, "coarse_only", "s.csv")
    original = out.read_bytes()
    out.unlink()
    assert run(["replay", tmp_path / "s.manifest.json"]) == 0
    assert out.read_bytes() == original
