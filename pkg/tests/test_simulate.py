import json

import numpy as np
import pytest

from ellsym import simulate
from ellsym.errors import ConfigError, NumericalFailure
from ellsym.samplers import AlternativeSpec


def _config(**kw):
    alts = (
        AlternativeSpec("elliptical", (0.0, 0.0), ((1.0, 0.0), (0.0, 2.0)), {"kernel": "gaussian"}, "null"),
        AlternativeSpec("gse", (0.0, 0.0), ((1.0, 0.0), (0.0, 2.0)), {"kernel": "gaussian", "lam": [3.0, 3.0]}, "skew"),
    )
    base = dict(d=2, n=40, replications=12, alternatives=alts, tests=(simulate.TestSpec("specified"), simulate.TestSpec("semiparam-t5")))
    base.update(kw)
    return simulate.SimulationConfig(**base)


def test_single_replication_gives_zero_or_one():
    table = simulate.run_simulation(_config(replications=1))
    assert all(r.rejection_frequency in (0.0, 1.0) for r in table.rows)
    assert len(table.rows) == 4


def test_determinism_and_workers():
    cfg = _config()
    a, b = simulate.run_simulation(cfg), simulate.run_simulation(cfg)
    assert a == b
    c = simulate.run_simulation(simulate.with_overrides(cfg, workers=2))
    assert c.rows == a.rows and c.config_hash == a.config_hash
    d = simulate.run_simulation(simulate.with_overrides(cfg, seed=1))
    assert d.config_hash != a.config_hash


def test_strong_skewness_is_detected():
    table = simulate.run_simulation(_config(replications=20, n=100))
    assert table.frequency("skew", "specified") > 0.8
    with pytest.raises(KeyError):
        table.frequency("skew", "baringhaus")


def test_csv_round_trip(tmp_path):
    cfg = _config(output=str(tmp_path / "out.csv"))
    table = simulate.run_simulation(cfg)
    assert (tmp_path / "out.csv").exists()
    back = simulate.ResultTable.load(tmp_path / "out.csv")
    assert back == table
    with pytest.raises(ConfigError):
        simulate.ResultTable.from_csv("alternative,parameter\n")


def test_failure_accounting(monkeypatch):
    real = simulate.run_test
    calls = {"n": 0}

    def flaky(name, data, *args, **kw):
        calls["n"] += 1
        if name == "semiparam-t5" and calls["n"] % 5 == 0:
            raise NumericalFailure("synthetic")
        return real(name, data, *args, **kw)

    monkeypatch.setattr(simulate, "run_test", flaky)
    table = simulate.run_simulation(_config(replications=10))
    bad = table.failed_cells
    assert bad and all(r.test == "semiparam-t5" for r in bad)
    assert all(r.rejection_frequency is None and r.failures > 0 and "failed" in r.error for r in bad)
    good = [r for r in table.rows if r.test == "specified"]
    assert all(r.failures == 0 and r.valid == 10 for r in good)


def test_cell_excludes_rare_failures():
    cfg = _config(replications=200)
    codes = np.zeros(200, dtype=np.int8)
    codes[:50] = simulate.REJECT
    codes[199] = simulate.FAILED
    row = simulate._cell(cfg.alternatives[0], cfg.tests[0], codes, cfg)
    assert row.failures == 1 and row.valid == 199
    assert np.isclose(row.rejection_frequency, 50 / 199)
    codes[197:] = simulate.FAILED
    assert simulate._cell(cfg.alternatives[0], cfg.tests[0], codes, cfg).rejection_frequency is None


def test_config_json(tmp_path):
    cfg = _config(seed=4)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    loaded = simulate.SimulationConfig.load(path)
    assert loaded == cfg and loaded.digest() == cfg.digest()
    over = simulate.SimulationConfig.load(path, seed=9, replications=3, workers=None)
    assert (over.seed, over.replications, over.workers) == (9, 3, 1)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda o: o.pop("d"),
        lambda o: o.update(replications=0),
        lambda o: o.update(colour="blue"),
        lambda o: o.update(d=3),
        lambda o: o.update(tests=["no-such-test"]),
        lambda o: o.update(tests=[{"name": "specified", "theta0": [0, 0, 0]}]),
        lambda o: o.update(tests=[{"name": "specified", "speed": 2}]),
        lambda o: o.update(alpha=1.5),
    ],
)
def test_config_errors(mutate):
    obj = _config().to_dict()
    mutate(obj)
    with pytest.raises(ConfigError):
        simulate.SimulationConfig.from_dict(obj)


def test_config_load_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        simulate.SimulationConfig.load(bad)
    with pytest.raises(ConfigError):
        simulate.SimulationConfig.load(tmp_path / "missing.json")


def test_test_spec_forms():
    spec = simulate.TestSpec.from_obj({"name": "semiparam-t4", "reference_scaling": "raw", "location": "spatial-median"})
    assert spec.label == "semiparam-t4[raw]"
    assert simulate.TestSpec.from_obj(spec.to_dict()) == spec
    assert simulate.TestSpec.from_obj("specified").label == "specified"
    with pytest.raises(ConfigError):
        simulate.TestSpec.from_obj(3)


def test_presets_construct():
    for name, build in simulate.PRESETS.items():
        cfg = build()
        assert cfg.d == 3 and cfg.n == 100, name
        assert simulate.SimulationConfig.from_dict(cfg.to_dict()) == cfg
    pit = simulate.pitfall_config(replications=5)
    assert pit.d == 10 and {a.label for a in pit.alternatives} == {"scenario-a", "scenario-b"}
    means = {a.label: np.asarray(a.theta) for a in pit.alternatives}
    assert np.allclose(means["scenario-a"] + means["scenario-b"], 0)


def test_pitfall_report_renders():
    report = simulate.run_pitfall(replications=3, seed=1)
    text = report.render()
    assert text.splitlines()[1].startswith("a,") and text.splitlines()[2].startswith("b,")
    for s in ("a", "b"):
        for t in ("specified", "semiparam"):
            f = report.frequency(s, t)
            assert f is None or 0 <= f <= 1


@pytest.mark.slow
def test_gaussian_null_size():
    alt = AlternativeSpec("elliptical", simulate.ORIGIN3, simulate.SIGMA3, {"kernel": "gaussian"}, "null")
    cfg = simulate.SimulationConfig(3, 100, 400, (alt,), (simulate.TestSpec("specified"),), seed=3)
    freq = simulate.run_simulation(cfg).frequency("null", "specified")
    assert abs(freq - 0.05) < 0.035
