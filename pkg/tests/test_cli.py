import csv
import json
import math

import numpy as np
import pytest

from landscape_lab import cli, llf1
from landscape_lab.config import RunConfig, expand_times, sample_points
from landscape_lab.errors import ArtifactError, ConfigError
from landscape_lab.grid import ScalarField, make_grid

SMALL_2D = {"grid": {"dim": 2, "n_nodes": 33}, "magnetic": {"b": 70},
            "eigen": {"n_pairs": 3},
            "paths": {"n_paths": 500, "dt": 1e-5, "t_grid": {"log": [1e-5, 1e-3, 5]},
                      "points": {"count": 2}}}
INTERVAL = {"grid": {"dim": 1, "lower": 0, "upper": math.pi, "n_nodes": 129},
            "laplacian_scale": 1.0, "potential": {"kind": "zero"}, "eigen": {"n_pairs": 2},
            "paths": {"n_paths": 4000, "dt": 1e-3, "t_grid": [0.1, 0.5, 1.0],
                      "points": [[math.pi / 2], [0.7]]}}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _run(tmp_path, *args, cfg=SMALL_2D, out="out"):
    path = _write(tmp_path, cfg)
    return cli.main([*args, "--config", path, "--out", str(tmp_path / out)])


def _manifest(tmp_path, command, out="out"):
    return json.loads((tmp_path / out / f"{command}.manifest.json").read_text())


def _csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# --- config ------------------------------------------------------------------
def test_defaults_materialized():
    cfg = RunConfig.from_dict({})
    d = cfg.to_dict()
    assert d["grid"]["n_nodes"] == 129 and d["potential"]["weight_high"] == 1280.0
    assert d["laplacian_scale"] == 0.5 and d["eigen"]["method"] == "block"
    assert RunConfig.from_dict(d).digest() == cfg.digest()


@pytest.mark.parametrize("data, msg", [
    ({"grid": {"dim": 3}}, "dim"),
    ({"gird": {}}, "unknown key"),
    ({"grid": {"nodes": 5}}, "unknown key"),
    ({"paths": {"dt": -1}}, "dt"),
    ({"paths": {"t_grid": {"log": [1, 0.1, 4]}}}, "log"),
    ({"eigen": {"method": "lanczos"}}, "method"),
    ({"eigen": {"method": "scan"}}, "scan"),
    ({"potential": {"kind": "file"}}, "path"),
    ({"laplacian_scale": 0}, "laplacian_scale"),
    ([], "top level"),
])
def test_bad_configs(data, msg):
    with pytest.raises(ConfigError, match=msg):
        RunConfig.from_dict(data)


def test_expand_times():
    assert expand_times([0.1, 0.2]) == (0.1, 0.2)
    assert expand_times({"range": [0.1, 0.3, 0.1]}) == pytest.approx((0.1, 0.2, 0.3))
    log = expand_times({"log": [1e-3, 1e-1, 3]})
    assert log == pytest.approx((1e-3, 1e-2, 1e-1))


def test_with_seed_overrides_every_seed():
    cfg = RunConfig.from_dict({}).with_seed(77)
    assert set(cfg.seeds().values()) == {77}


def test_sample_points_inside_margin():
    g = make_grid(2, -0.5, 0.5, 9)
    pts = sample_points(g, 50, 0.2, seed=3)
    assert pts.shape == (50, 2) and pts.min() >= -0.3 and pts.max() <= 0.3
    assert np.array_equal(pts, sample_points(g, 50, 0.2, seed=3))


def test_file_potential_missing_and_stale(tmp_path):
    g = make_grid(1, 0, 1, 9)
    p = tmp_path / "V.llf1"
    sha = llf1.write_field(p, ScalarField(g, np.ones(9)))
    grid = {"dim": 1, "lower": 0, "upper": 1, "n_nodes": 9}
    ok = RunConfig.from_dict({"grid": grid, "potential": {"kind": "file", "path": "V.llf1",
                                                          "sha256": sha}}, base_dir=str(tmp_path))
    assert np.all(ok.potential.build(g, ok.base_dir).values == 1)
    stale = RunConfig.from_dict({"grid": grid, "potential": {"kind": "file", "path": "V.llf1",
                                                             "sha256": "0" * 64}})
    with pytest.raises(ArtifactError, match="stale"):
        stale.potential.build(g, str(tmp_path))
    with pytest.raises(ArtifactError, match="does not exist"):
        stale.potential.build(g, str(tmp_path / "nowhere"))
    other = make_grid(1, 0, 1, 17)
    with pytest.raises(ConfigError):
        ok.potential.build(other, ok.base_dir)


def test_extended_potential_agrees_on_box():
    cfg = RunConfig.from_dict({"grid": {"dim": 2, "n_nodes": 17}})
    g = cfg.grid.build()
    V = cfg.potential.build(g)
    big = cfg.potential.build_extended(g, 0.1)
    k = int(round(0.1 / g.spacing[0]))
    assert np.allclose(big.values[k:k + 17, k:k + 17], V.values, rtol=1e-12)


# --- commands ----------------------------------------------------------------
def test_gen_model_outputs_and_manifest(tmp_path):
    assert _run(tmp_path, "gen-model") == 0
    out = tmp_path / "out"
    V = llf1.read_field(out / "V.llf1")
    assert V.grid.shape == (33, 33)
    m = _manifest(tmp_path, "gen-model")
    assert m["status"] == "ok" and set(m["artifacts"]) == {"V.llf1", "A_x.llf1", "A_y.llf1"}
    assert m["config"]["magnetic"]["b"] == 70 and m["seeds"]["potential"] == 0
    assert m["backend"] in ("cython", "python")


def test_gen_model_zero_field(tmp_path):
    cfg = dict(SMALL_2D, magnetic={"b": 0})
    assert _run(tmp_path, "gen-model", cfg=cfg) == 0
    for c in ("A_x", "A_y"):
        assert not np.any(llf1.read_field(tmp_path / "out" / f"{c}.llf1").values)


def test_outputs_are_deterministic(tmp_path):
    assert _run(tmp_path, "gen-model", out="a") == 0
    assert _run(tmp_path, "gen-model", out="b") == 0
    assert _manifest(tmp_path, "gen-model", "a")["artifacts"] == _manifest(tmp_path, "gen-model", "b")["artifacts"]
    path = _write(tmp_path, SMALL_2D)
    assert cli.main(["gen-model", "--config", path, "--out", str(tmp_path / "c"), "--seed", "5"]) == 0
    m = json.loads((tmp_path / "c" / "gen-model.manifest.json").read_text())
    assert m["artifacts"]["V.llf1"] != _manifest(tmp_path, "gen-model", "a")["artifacts"]["V.llf1"]
    assert set(m["seeds"].values()) == {5}


def test_landscape_command(tmp_path):
    assert _run(tmp_path, "landscape", cfg=INTERVAL) == 0
    rows = _csv(tmp_path / "out" / "landscape.csv")
    assert len(rows) == 129 and rows[0]["inv_u"] == "inf"
    assert "np." not in (tmp_path / "out" / "landscape.csv").read_text()
    x, u = float(rows[64]["x"]), float(rows[64]["u"])
    assert u == pytest.approx(x * (math.pi - x) / 2, rel=1e-10)


def test_local_landscape_command(tmp_path):
    assert _run(tmp_path, "local-landscape") == 0
    rows = _csv(tmp_path / "out" / "local_landscape.csv")
    assert len(rows) == 33 * 33 and {"V", "V_t", "in_collar"} <= set(rows[0])
    assert llf1.read_field(tmp_path / "out" / "V_t.llf1").grid.shape == (33, 33)


def test_eigs_command(tmp_path):
    assert _run(tmp_path, "eigs") == 0
    info = json.loads((tmp_path / "out" / "eigs.json").read_text())
    lams = [p["lambda"] for p in info["pairs"]]
    assert lams == pytest.approx([11918.377344741952, 11985.484783105656, 12210.03437110324], rel=1e-9)
    phi = llf1.read_field(tmp_path / "out" / "eig_000.llf1")
    assert np.max(np.abs(phi.values)) == pytest.approx(1.0)


def test_eigs_scan_method_writes_scan(tmp_path):
    cfg = dict(INTERVAL, eigen={"n_pairs": 2, "method": "scan",
                                "scan": {"start": 0.3, "stop": 5.0, "step": 0.1}})
    assert _run(tmp_path, "eigs", cfg=cfg) == 0
    rows = _csv(tmp_path / "out" / "monitor_scan.csv")
    assert sum(int(r["is_minimum"]) for r in rows) >= 2


def test_eigs_nonconvergence_exits_4(tmp_path):
    cfg = dict(SMALL_2D, eigen={"n_pairs": 3, "max_iter": 1})
    assert _run(tmp_path, "eigs", cfg=cfg) == 4
    m = _manifest(tmp_path, "eigs")
    assert m["status"] == "numerical_breakdown" and "residual" in m["error"]


def test_config_errors_exit_2(tmp_path, capsys):
    assert _run(tmp_path, "gen-model", cfg={"grid": {"dim": 3}}) == 2
    assert "dim" in capsys.readouterr().err
    assert cli.main(["gen-model", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["gen-model", "--config", str(bad)]) == 2
    assert _run(tmp_path, "landscape", cfg={"potential": {"kind": "file", "path": "nope.llf1"}}) == 2
    assert _manifest(tmp_path, "landscape")["status"] == "config_error"
    cfg1 = dict(INTERVAL, potential={"kind": "zero"})
    assert _run(tmp_path, "verify", "thm3", cfg=cfg1) == 2


def test_fk_bound_csv(tmp_path):
    assert _run(tmp_path, "fk-bound", cfg=INTERVAL) == 0
    rows = _csv(tmp_path / "out" / "bound_profile.csv")
    assert list(rows[0]) == ["x0_x", "t", "mean", "stderr", "n_alive", "n_paths", "lambda"]
    assert len(rows) == 6


def test_verify_example_and_thm1(tmp_path, capsys):
    assert _run(tmp_path, "verify", "example-1d", cfg=INTERVAL) == 0
    assert "example-1d: PASS" in capsys.readouterr().out
    cfg = dict(SMALL_2D, verify={"b_values": [0, 70]})
    assert _run(tmp_path, "verify", "thm1", cfg=cfg) == 0
    rows = _csv(tmp_path / "out" / "verify_thm1.csv")
    assert len(rows) == 6 and all(r["passed"] == "True" for r in rows)
    v = _manifest(tmp_path, "verify-thm1")["verification"]["thm1"]
    assert v["passed"] and v["gating"]


def test_verify_thm2_and_corollary_pass(tmp_path):
    assert _run(tmp_path, "verify", "thm2", cfg=INTERVAL) == 0
    assert _run(tmp_path, "verify", "corollary", cfg=INTERVAL) == 0


def test_corollary_failure_mode_exits_3(tmp_path, capsys):
    # with only late times and no slack factor the infimum over the grid is not small enough
    cfg = dict(INTERVAL, paths={"n_paths": 400000, "dt": 0.01, "t_grid": [3.0],
                                "points": [[math.pi / 2]]},
               verify={"corollary_factor": 1.0})
    assert _run(tmp_path, "verify", "corollary", cfg=cfg) == 3
    out = capsys.readouterr().out
    assert "FAIL" in out and "t-grid covers" in out
    assert _manifest(tmp_path, "verify-corollary")["status"] == "verification_failed"


def test_fk_landscape_and_thm3(tmp_path):
    cfg = dict(INTERVAL, laplacian_scale=0.5,
               potential={"kind": "bumps", "bumps_per_axis": 8, "weight_high": 40, "sigma": 0.5,
                          "offset": 4},
               paths={"n_paths": 3000, "dt": 1e-3, "t_grid": {"log": [1e-3, 2, 12]},
                      "points": {"count": 3, "margin": 0.1}})
    assert _run(tmp_path, "fk-landscape", cfg=cfg) == 0
    rows = _csv(tmp_path / "out" / "fk_landscape.csv")
    assert len(rows) == 3 and all(float(r["lower"]) <= float(r["upper"]) for r in rows)
    assert "np." not in (tmp_path / "out" / "fk_landscape.csv").read_text()
    assert _run(tmp_path, "verify", "thm3", cfg=cfg) == 0
