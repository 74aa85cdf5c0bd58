import csv
import io
import json

import numpy as np
import pytest

from ellsym import cli, simulate
from ellsym.errors import ConfigError, DataError, NumericalFailure


def _write_csv(path, x, header=None, labels=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        for i, row in enumerate(x):
            w.writerow(([labels[i]] if labels else []) + [repr(float(v)) for v in row])
    return str(path)


@pytest.fixture
def gaussian_csv(tmp_path):
    x = np.random.default_rng(0).standard_normal((80, 2))
    return _write_csv(tmp_path / "g.csv", x, header=["a", "b"])


def test_test_command(gaussian_csv, tmp_path, capsys):
    out = tmp_path / "res.csv"
    code = cli.main(["test", "--data", gaussian_csv, "--tests", "specified,semiparam-t5,cassart-pg", "--theta0", "0,0", "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "semiparam-t5" in printed
    rows = list(csv.DictReader(out.open()))
    assert [r["test"] for r in rows] == ["specified", "semiparam-t5", "cassart-pg"]
    assert all(0 <= float(r["p_value"]) <= 1 for r in rows)


def test_test_command_is_reproducible(gaussian_csv, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert cli.main(["test", "--data", gaussian_csv, "--tests", "semiparam-t4", "--out", str(out)]) == 0
    assert a.read_text() == b.read_text()


def test_usage_errors(gaussian_csv, capsys):
    assert cli.main(["test", "--data", gaussian_csv, "--tests", "nonsense"]) == 1
    assert cli.main(["test", "--data", gaussian_csv, "--tests", "specified", "--theta0", "0,0,0"]) == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["test", "--tests", "specified"])
    assert exc.value.code == 1
    assert cli.main(["simulate"]) == 1
    assert "theta0" in capsys.readouterr().err


def test_data_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n3,4\n5,oops\n")
    assert cli.main(["test", "--data", str(bad), "--tests", "specified"]) == 2
    assert "line 4" in capsys.readouterr().err
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2\n3\n")
    with pytest.raises(DataError, match="line 2"):
        cli.read_data(ragged)
    assert cli.main(["test", "--data", str(tmp_path / "missing.csv"), "--tests", "specified"]) == 2


def test_read_data_variants(tmp_path):
    x = np.arange(6.0).reshape(3, 2)
    plain = cli.read_data(_write_csv(tmp_path / "p.csv", x))
    assert np.array_equal(plain.values, x) and plain.labels is None and plain.columns is None
    labelled = cli.read_data(_write_csv(tmp_path / "l.csv", x, header=["date", "u", "v"], labels=["d1", "d2", "d3"]))
    assert np.array_equal(labelled.values, x)
    assert labelled.labels == ("d1", "d2", "d3") and labelled.columns == ("date", "u", "v")


def test_rolling_windows():
    for n, w, s in [(10, 3, 1), (10, 3, 2), (10, 10, 5), (100, 30, 7)]:
        wins = cli.rolling_windows(n, w, s)
        assert len(wins) == (n - w) // s + 1
        assert all(b - a == w and b <= n for a, b in wins)
    with pytest.raises(ConfigError):
        cli.rolling_windows(5, 6, 1)
    with pytest.raises(ConfigError):
        cli.rolling_windows(5, 2, 0)


def test_rolling_detects_change(tmp_path):
    rng = np.random.default_rng(3)
    sym = rng.standard_normal((150, 2))
    skew = np.column_stack([rng.exponential(size=150) - 1.0, rng.standard_normal(150)])
    labels = [f"t{i:03d}" for i in range(300)]
    path = _write_csv(tmp_path / "r.csv", np.vstack([sym, skew]), header=["time", "x", "y"], labels=labels)
    out = tmp_path / "roll.csv"
    code = cli.main(["rolling", "--data", path, "--window", "100", "--step", "50", "--tests", "semiparam-t5", "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == (300 - 100) // 50 + 1
    assert rows[0]["window_start"] == "t000" and rows[0]["window_end"] == "t099"
    assert float(rows[0]["p_value"]) > 0.01
    assert float(rows[-1]["p_value"]) < 0.001


def test_are_command(capsys):
    assert cli.main(["are", "--d", "2", "--ref", "t4", "--under", "t5,gaussian"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert list(rows[0]) == ["d", "reference", "g", "are", "published", "error"]
    assert abs(float(rows[0]["are"]) - 1.964) < 0.005 and rows[0]["published"] == "1.964"
    assert rows[1]["are"] == "" and "Degenerate" in rows[1]["error"]


def test_simulate_command(tmp_path):
    out = tmp_path / "sim.csv"
    code = cli.main(["simulate", "--preset", "specified", "--reps", "2", "--seed", "5", "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert text.startswith("# config_hash=")
    out2 = tmp_path / "sim2.csv"
    cli.main(["simulate", "--preset", "specified", "--reps", "2", "--seed", "5", "--out", str(out2)])
    assert out2.read_text() == text


def test_simulate_reports_failed_cells(tmp_path, monkeypatch):
    def broken(*args, **kw):
        raise NumericalFailure("synthetic")

    monkeypatch.setattr(simulate, "run_test", broken)
    assert cli.main(["simulate", "--preset", "specified", "--reps", "2", "--out", str(tmp_path / "s.csv")]) == 3


def test_simulate_config_file(tmp_path):
    cfg = simulate.with_overrides(simulate.preset_sas(), replications=2)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert cli.main(["simulate", "--config", str(path), "--out", str(tmp_path / "o.csv")]) == 0
    assert cli.main(["simulate", "--config", str(path), "--preset", "sas"]) == 1


def test_pitfall_command(capsys):
    assert cli.main(["pitfall", "--reps", "2", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].startswith("a,") and lines[2].startswith("b,")
