import math

import pytest

from blochdd import (ConfigError, ExperimentConfig, coefficient_table_text,
                     list_presets, load_config, run)

TINY = {
    "name": "tiny",
    "sequences": ["4p"],
    "shapes": ["delta_pi"],
    "model": {"gamma": 0.0, "gamma_phi": 0.006283185307179587},
    "noise": {"B0": 0.1, "tau_c": 8.0, "dt": 0.03125},
    "t_max": 16,
    "ensemble": 3,
    "seed": 7,
    "emit": {"ideal": True, "redistribution": True, "baseline": True,
             "single": True},
}


def test_presets_ship_with_the_package():
    names = list_presets()
    for name in ("fig3", "fig4", "fig5", "fig6", "fig7", "table1"):
        assert name in names


def test_preset_inheritance_chain():
    base = load_config("fig5")
    child = load_config("fig6")
    assert base.sequences == ("8s",)
    assert child.sequences == ("16a",)
    assert child.shapes == base.shapes
    assert child.seed == base.seed
    grandchild = load_config("fig7")
    assert grandchild.gamma_phi == 0.0
    assert grandchild.shapes == base.shapes


def test_sample_fidelity_preset_matches_contract_defaults():
    cfg = load_config("fig3")
    assert cfg.sequences == ("none", "4p", "8s", "16a")
    assert cfg.noise["tau_c"] == pytest.approx(8.0)
    assert cfg.noise["B0"] == pytest.approx(0.1)
    assert cfg.gamma_phi == pytest.approx(2.0 * math.pi * 1e-3)
    assert cfg.t_max == pytest.approx(512.0)
    assert cfg.ensemble == 400


def test_config_validation():
    with pytest.raises(ConfigError):
        load_config({**TINY, "kind": "movie"})
    with pytest.raises(ConfigError):
        load_config({**TINY, "typo_key": 1})
    with pytest.raises(ConfigError):
        load_config({**TINY, "ensemble": 0})
    with pytest.raises(ConfigError):
        load_config({**TINY, "noise": {"B0": 0.1}})
    with pytest.raises(ConfigError, match="emit"):
        load_config({**TINY, "emit": ["series", "manifest"]})
    with pytest.raises(ConfigError, match="noise"):
        load_config({**TINY, "noise": [0.1, 8.0]})
    with pytest.raises(ConfigError, match="designed_shapes"):
        load_config({**TINY, "designed_shapes": ["easy"]})
    with pytest.raises(ConfigError, match="presets"):
        load_config("no_such_preset")


def test_config_round_trips_through_dict():
    cfg = load_config(TINY)
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again == cfg


def test_run_emits_series_and_manifest(tmp_path):
    manifest = run(TINY, tmp_path)
    assert manifest["status"] == "ok"
    assert (tmp_path / "manifest.json").exists()
    csv_path = tmp_path / "4p__delta_pi.csv"
    single_path = tmp_path / "4p__delta_pi__single.csv"
    assert csv_path.exists() and single_path.exists()
    header = csv_path.read_text().splitlines()[0]
    assert header == "t,F_avg,stderr,F_ideal,F_redist,delta_F"
    job = manifest["jobs"][0]
    assert job["status"] == "done"
    assert job["summary"]["F_final"] <= 1.0
    assert manifest["seeds"]["noise_master"] == 7
    assert set(manifest["versions"]) == {"blochdd", "numpy", "scipy",
                                         "python"}


def test_reruns_are_byte_identical(tmp_path):
    run(TINY, tmp_path / "a")
    run(TINY, tmp_path / "b")
    name = "4p__delta_pi.csv"
    assert ((tmp_path / "a" / name).read_bytes()
            == (tmp_path / "b" / name).read_bytes())


def test_worker_pool_matches_serial_output(tmp_path):
    cfg = {**TINY, "sequences": ["4p", "2a"]}
    run(cfg, tmp_path / "serial", jobs=1)
    run(cfg, tmp_path / "pool", jobs=2)
    for name in ("4p__delta_pi.csv", "2a__delta_pi.csv"):
        assert ((tmp_path / "serial" / name).read_bytes()
                == (tmp_path / "pool" / name).read_bytes())


def test_failures_are_isolated_per_job(tmp_path):
    cfg = {**TINY, "shapes": ["delta_pi", "NOPE"]}
    manifest = run(cfg, tmp_path)
    statuses = {j["shape"]: j["status"] for j in manifest["jobs"]}
    assert statuses["delta_pi"] == "done"
    assert statuses["NOPE"] == "failed"
    assert manifest["status"] == "partial (1 failed)"
    assert "unknown shape" in [j for j in manifest["jobs"]
                               if j["shape"] == "NOPE"][0]["error"]


def test_period_mismatch_is_reported(tmp_path):
    cfg = {**TINY, "t_max": 6}  # 4p has period 4
    manifest = run(cfg, tmp_path)
    assert manifest["jobs"][0]["status"] == "failed"
    assert "t_max" in manifest["jobs"][0]["error"]


def test_designed_shape_jobs_resolve(tmp_path):
    cfg = {**TINY,
           "noise": None,
           "ensemble": 1,
           "emit": {"redistribution": True},
           "shapes": ["easy"],
           "designed_shapes": {"easy": {"phi0": "pi", "n_harmonics": 3,
                                        "targets": {"upsilon2": -0.5},
                                        "seed": 5, "restarts": 4}}}
    manifest = run(cfg, tmp_path)
    assert manifest["status"] == "ok"
    assert manifest["seeds"]["designed"] == {"easy": 5}
    text = (tmp_path / "4p__easy.csv").read_text()
    assert text.splitlines()[0] == "t,F_avg,F_redist"


def test_table_run_writes_full_csv(tmp_path):
    manifest = run({"name": "tbl", "kind": "table"}, tmp_path)
    assert manifest["status"] == "ok"
    lines = (tmp_path / "coefficients.csv").read_text().splitlines()
    assert lines[0].startswith("name,phi0,upsilon")
    names = [ln.split(",")[0] for ln in lines[1:]]
    assert names[:2] == ["delta_pi", "delta_pi2"]
    assert "W11_pi" not in names
    assert "G_0.01_pi2" in names


def test_table_text_subsets():
    text = coefficient_table_text(["delta_pi"])
    assert len(text.splitlines()) == 2
    text = coefficient_table_text(["delta_pi2", "F1"])
    names = [ln.split(",")[0] for ln in text.splitlines()[1:]]
    assert names == ["delta_pi2", "F1"]
