import csv
import io
import json

import numpy as np
import pytest

from gapped1d import cli, config, jsonio, mps
from gapped1d.errors import ConfigError


def write(tmp_path, doc, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


TINY = {
    "model": {"model": "tfim", "n": 3, "d": 2, "params": {"g": 2.0}},
    "net": {"count": 4},
    "agsp": {"m": 4, "ell": 4},
    "solver": {"max_iter": 100},
}


def test_defaults_validate():
    cfg = config.from_dict({})
    assert cfg.net.B_net == 2 and cfg.model.model == "tfim"


def test_unknown_key_names_it():
    with pytest.raises(ConfigError) as err:
        config.from_dict({"agsp": {"mm": 3}})
    assert err.value.key == "agsp.mm"


def test_override_parsing():
    doc = config.apply_overrides(config.DEFAULTS, ["agsp.ell=500", "net.mode=full", "model.params.g=1.5"])
    cfg = config.from_dict(doc)
    assert cfg.agsp.ell == 500 and cfg.net.mode == "full" and cfg.model.params["g"] == 1.5
    with pytest.raises(ConfigError):
        config.apply_overrides(config.DEFAULTS, ["agsp.nope=1"])
    with pytest.raises(ConfigError):
        config.apply_overrides(config.DEFAULTS, ["novalue"])


def test_theory_inequalities():
    config.check_theory_inequalities(0.3, (0.3 / 169) ** 2)
    with pytest.raises(ConfigError, match="84 c_eps/eps < 1/2"):
        config.check_theory_inequalities(0.5, 0.003)
    with pytest.raises(ConfigError, match="1/12"):
        config.from_dict({"mode": "theory", "epsilon": 0.3, "c_eps_override": 0.01})


def test_zero_gap_rejected():
    with pytest.raises(ConfigError):
        config.from_dict({"epsilon": 0.0})


def test_effective_config_round_trip():
    cfg = config.from_dict(TINY)
    again = config.from_dict(json.loads(jsonio.dumps(cfg.to_dict())))
    assert again == cfg


def test_seed_streams_are_independent():
    a = config.generator(0, 1, config.STREAM_NET).integers(2**63)
    b = config.generator(0, 1, config.STREAM_AGSP).integers(2**63)
    c = config.generator(0, 2, config.STREAM_NET).integers(2**63)
    assert len({a, b, c}) == 3
    assert a == config.generator(0, 1, config.STREAM_NET).integers(2**63)


def test_jsonio_precision():
    x = 0.1 + 0.2
    assert float(jsonio.dumps({"x": x}).split(": ")[1].rstrip("}\n ")) == x
    assert json.loads(jsonio.dumps({"a": [1, 2.5], "b": {"c": None, "d": True}})) == {
        "a": [1, 2.5],
        "b": {"c": None, "d": True},
    }
    assert jsonio.dumps(np.float64(2.0)) == "2.0\n"


def test_missing_config_exits_3(tmp_path, capsys):
    assert cli.main(["solve", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 3
    assert "config" in capsys.readouterr().err


def test_bad_override_exits_3(tmp_path):
    p = write(tmp_path, TINY)
    assert cli.main(["solve", "--config", str(p), "--override", "agsp.bogus=1", "--out", str(tmp_path)]) == 3


def test_theory_violation_exits_3(tmp_path, capsys):
    p = write(tmp_path, {**TINY, "mode": "theory", "epsilon": 0.5, "c_eps_override": 0.003})
    assert cli.main(["solve", "--config", str(p), "--out", str(tmp_path / "o")]) == 3
    assert "84 c_eps/eps" in capsys.readouterr().err


def test_solve_writes_outputs_and_honours_overrides(tmp_path):
    p = write(tmp_path, TINY)
    out = tmp_path / "o"
    assert cli.main(["solve", "--config", str(p), "--override", "agsp.ell=5", "--seed", "3", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["agsp"]["ell"] == 5 and report["config"]["seed"] == 3
    assert "wall" not in (out / "report.json").read_text()
    s = mps.from_json((out / "result.mps.json").read_text())
    assert s.n == 3
    assert "fidelity" in (out / "summary.txt").read_text()


def test_no_oracle_flag(tmp_path):
    p = write(tmp_path, TINY)
    out = tmp_path / "o"
    assert cli.main(["solve", "--config", str(p), "--no-oracle", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["iterations"][0]["extend"]["witness"] is None


def test_aborted_iteration_exits_2(tmp_path, monkeypatch):
    from gapped1d import pipeline
    from gapped1d.errors import IterationAborted

    def boom(cfg):
        raise IterationAborted(1, "cardinality_reduce", "forced")

    monkeypatch.setattr(pipeline, "run", boom)
    p = write(tmp_path, TINY)
    assert cli.main(["solve", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_empty_bench_is_header_only(tmp_path):
    assert cli.main(["bench", "--suite", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "bench.csv").read_text()
    assert text == ",".join(cli.BENCH_COLUMNS) + "\n"


def test_bench_rows_are_deterministic_apart_from_time(tmp_path):
    p = write(tmp_path, TINY, "tiny.json")
    for k in (1, 2):
        assert cli.main(["bench", "--suite", str(p), "--out", str(tmp_path / f"b{k}")]) == 0
    rows = [list(csv.DictReader(io.StringIO((tmp_path / f"b{k}" / "bench.csv").read_text()))) for k in (1, 2)]
    assert len(rows[0]) == 1 and rows[0][0]["status"] == "ok"
    for r in rows:
        r[0].pop("wall_seconds")
    assert rows[0] == rows[1]


def test_packaged_configs_load():
    for name in cli.DEFAULT_SUITE:
        cfg = config.from_dict(cli.packaged_config(name))
        assert cfg.net.B_net <= 2 and cfg.net.count <= 2000


def test_verify_runs_suite(capsys):
    assert cli.main(["verify", "--instances", "2"]) == 0
    out = capsys.readouterr().out
    assert "gluing_clause3" in out and "FAIL" not in out


def test_refresh_fixtures(tmp_path):
    out = tmp_path / "fx.json"
    assert cli.main(["refresh-fixtures", "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["records"]) == len(cli.FIXTURE_MODELS)
