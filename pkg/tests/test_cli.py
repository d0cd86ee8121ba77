import json

import numpy as np
import pytest

from blochdd.cli import main

TINY = {
    "name": "tiny",
    "sequences": ["2a"],
    "shapes": ["delta_pi"],
    "model": {"gamma": 0.0, "gamma_phi": 0.006283185307179587},
    "noise": {"B0": 0.1, "tau_c": 8.0, "dt": 0.03125},
    "t_max": 8,
    "ensemble": 2,
    "seed": 3,
    "emit": {"baseline": True},
}


def test_subcommand_is_required():
    with pytest.raises(SystemExit):
        main([])


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "blochdd" in capsys.readouterr().out


def test_coeffs_subset(capsys):
    assert main(["coeffs", "delta_pi", "G_0.10_pi"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("name,phi0,upsilon")
    assert [ln.split(",")[0] for ln in out[1:]] == ["delta_pi", "G_0.10_pi"]


def test_coeffs_warns_on_corrupted_rows(capsys):
    assert main(["coeffs", "W11_pi"]) == 0
    captured = capsys.readouterr()
    assert "corrupted_source" in captured.err
    assert len(captured.out.splitlines()) == 1  # header only


def test_coeffs_unknown_shape_fails(capsys):
    assert main(["coeffs", "NOPE"]) == 2
    assert "unknown shape" in capsys.readouterr().err


def test_coeffs_writes_file(tmp_path, capsys):
    out = tmp_path / "table.csv"
    assert main(["coeffs", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1].split(",")[0] == "delta_pi"
    assert len(lines) > 15


def test_cumulants_json_reports_redistribution(capsys):
    code = main(["cumulants", "4p", "delta_pi",
                 "--gamma-phi", "0.002", "--json"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    diag = np.diagonal(payload["gamma0"])
    assert np.allclose(diag, [0.002, 0.002, 0.0], atol=1e-12)
    assert np.max(np.abs(payload["gamma1"])) < 1e-12
    assert payload["period"] == pytest.approx(4.0)


def test_cumulants_field_must_be_a_triple(capsys):
    assert main(["cumulants", "4p", "delta_pi", "--field", "1,2"]) == 2
    assert "three comma-separated" in capsys.readouterr().err


def test_simulate_runs_and_is_reproducible(tmp_path, capsys):
    cfg = tmp_path / "tiny.json"
    cfg.write_text(json.dumps(TINY))
    assert main(["simulate", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", str(cfg), "--out", str(tmp_path / "b")]) == 0
    name = "2a__delta_pi.csv"
    assert ((tmp_path / "a" / name).read_bytes()
            == (tmp_path / "b" / name).read_bytes())
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["status"] == "ok"


def test_simulate_seed_override_lands_in_manifest(tmp_path):
    cfg = tmp_path / "tiny.json"
    cfg.write_text(json.dumps(TINY))
    main(["simulate", str(cfg), "--out", str(tmp_path / "s"),
          "--seed", "42"])
    manifest = json.loads((tmp_path / "s" / "manifest.json").read_text())
    assert manifest["seeds"]["noise_master"] == 42


def test_simulate_partial_failure_exits_nonzero(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({**TINY, "shapes": ["delta_pi", "NOPE"]}))
    code = main(["simulate", str(cfg), "--out", str(tmp_path / "out")])
    assert code == 1
    assert "failed" in capsys.readouterr().err


def test_preset_listing(capsys):
    assert main(["preset", "--list"]) == 0
    names = capsys.readouterr().out.split()
    assert "fig3" in names and "table1" in names
    assert main(["preset"]) == 0
    assert capsys.readouterr().out.split() == names


def test_preset_table_run(tmp_path, capsys):
    assert main(["preset", "table1", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "coefficients.csv").exists()


def test_design_json(capsys):
    code = main(["design", "--phi0", "pi", "--harmonics", "3",
                 "--target", "upsilon2=-0.2", "--seed", "5",
                 "--restarts", "4", "--json"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["coefficients"]["upsilon2"] == pytest.approx(-0.2,
                                                                abs=1e-6)
    assert payload["fourier_coefficients"][0] == pytest.approx(0.5)


def test_design_rejects_malformed_targets(capsys):
    assert main(["design", "--phi0", "pi", "--harmonics", "3",
                 "--target", "upsilon"]) == 2
    assert "name=value" in capsys.readouterr().err


def test_design_accepts_ratio_values(capsys):
    code = main(["design", "--phi0", "pi", "--harmonics", "3",
                 "--target", "upsilon2=1/3", "--seed", "7",
                 "--restarts", "4", "--json"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["coefficients"]["upsilon2"] == pytest.approx(1.0 / 3.0,
                                                                abs=1e-6)


def test_verify_single_criterion(tmp_path, capsys):
    report_path = tmp_path / "report.json"
    code = main(["verify", "--criterion", "1",
                 "--out", str(report_path)])
    assert code == 0
    assert "criterion  1" in capsys.readouterr().out
    report = json.loads(report_path.read_text())
    assert report["passed"] is True
    assert report["criteria"][0]["index"] == 1


def test_verify_unknown_criterion(capsys):
    assert main(["verify", "--criterion", "99"]) == 2
    assert "no such criterion" in capsys.readouterr().err


def test_verify_surfaces_step_guard_in_report(capsys):
    code = main(["verify", "--criterion", "6", "--dt", "0.9", "--json"])
    assert code == 1
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] is False
    assert "StepTooLarge" in report["criteria"][0]["detail"]
