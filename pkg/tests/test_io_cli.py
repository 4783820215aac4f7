import json

import numpy as np
import pytest

from biholder import cli, io
from biholder.besov import SampledFunction
from biholder.errors import ConfigError
from biholder.mapping import make_identity
from biholder.space import build_cantor, from_matrix


def test_points_roundtrip(tmp_path):
    c = build_cantor(1 / 3, 4)
    io.write_points_csv(c, tmp_path / "pts.csv")
    back = io.read_points_csv(tmp_path / "pts.csv")
    assert back.ids == c.ids
    assert np.array_equal(back.coords, c.coords) and np.array_equal(back.weights, c.weights)


def test_matrix_points(tmp_path):
    (tmp_path / "pts.csv").write_text("id,x1,weight\na,0,0.5\nb,0,0.5\n")
    (tmp_path / "d.csv").write_text("0,2\n2,0\n")
    sp = io.read_points_csv(tmp_path / "pts.csv", tmp_path / "d.csv")
    assert sp.distance("a", "b") == 2.0


def test_map_and_function_roundtrip(tmp_path):
    c = build_cantor(1 / 3, 3)
    m = make_identity(c)
    io.write_map_csv(m, tmp_path / "map.csv")
    assert np.array_equal(io.read_map_csv(c, c, tmp_path / "map.csv").image, m.image)
    u = SampledFunction(c, np.linspace(0, 1, c.n))
    io.write_function_csv(u, tmp_path / "u.csv")
    assert np.array_equal(io.read_function_csv(c, tmp_path / "u.csv").values, u.values)


def test_bad_header(tmp_path):
    (tmp_path / "u.csv").write_text("pid,val\n")
    with pytest.raises(ConfigError):
        io.read_function_csv(from_matrix([[0.0, 1.0], [1.0, 0.0]], [1.0, 1.0]), tmp_path / "u.csv")


def test_report_schema(tmp_path):
    io.dump_report({"x": np.float64(1.5), "a": np.arange(2)}, tmp_path / "r.json")
    data = json.loads((tmp_path / "r.json").read_text())
    assert data == {"schema": 1, "x": 1.5, "a": [0, 1]}


def test_unknown_preset():
    with pytest.raises(ConfigError):
        cli.preset("nope")


def test_config_needs_seed_and_resolves_names():
    with pytest.raises(ConfigError):
        cli.RunConfig.from_dict({"spaces": {}})
    with pytest.raises(ConfigError):
        cli.RunConfig.from_dict({"seed": 0, "maps": {"f": {"builder": "identity", "domain": "Z"}}})


def test_preset_is_deterministic(tmp_path):
    for k in (1, 2):
        cfg = cli.apply_overrides(cli.preset("snowflake-identity"), out=str(tmp_path / f"r{k}"))
        assert cli.run(cfg) == 0
    a = (tmp_path / "r1" / "embedding.json").read_bytes()
    assert a == (tmp_path / "r2" / "embedding.json").read_bytes()
    assert json.loads(a)["schema"] == 1


def test_verify_failure_sets_exit_status(tmp_path):
    cfg = {
        "seed": 0, "out": "out",
        "spaces": {"Z": {"builder": "grid", "dim": 2, "half_width": 4.0, "resolution": 21}},
        "maps": {"f": {"builder": "sqrt_radial", "domain": "Z"}},
        "analyses": [{"name": "ub", "kind": "uniform_boundedness", "map": "f", "r": 2.0,
                      "mode": "verify", "expect": {"b_max": 1.0}}],
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert cli.main(["run", str(path)]) == 1
    cfg["analyses"][0]["mode"] = "explore"
    path.write_text(json.dumps(cfg))
    assert cli.main(["run", str(path)]) == 0


def test_main_reports_config_errors(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    assert cli.main(["run", str(path)]) == 2
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize("name", ["example51", "example52", "remark53", "prop14-roundtrip",
                                  "lemma31-equivalence"])
def test_presets_pass(tmp_path, name):
    cfg = cli.apply_overrides(cli.preset(name), out=str(tmp_path))
    assert cli.run(cfg) == 0
