import os
import shutil

import pytest

from ccc_safety.cli import main

CONFIG = os.path.join(os.path.dirname(__file__), "..", "configs", "table1.ini")


def _config_with(tmp_path, replacements: dict[str, str], name="cfg.ini") -> str:
    text = open(CONFIG).read()
    for old, new in replacements.items():
        assert old in text, old
        text = text.replace(old, new)
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_critical_lag_output(capsys):
    assert main(["critical-lag", "--config", CONFIG]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "xi_cr = 0.3081 s"
    assert out[1].startswith("xi_cr_s=0.30809")


def test_critical_lag_sweep_monotone(capsys):
    assert main(["critical-lag", "--config", CONFIG, "--sweep", "6"]) == 0
    rows = [
        line.split(",") for line in capsys.readouterr().out.splitlines()[3:]
    ]
    margins = [float(r[0]) for r in rows]
    lags = [float(r[1]) for r in rows]
    assert margins == sorted(margins)
    assert lags == sorted(lags)  # larger headway margin admits more lag


def test_critical_lag_degenerate_margin(tmp_path, capsys):
    cfg = _config_with(tmp_path, {"D_sf = 1.0": "D_sf = 5.0"})
    assert main(["critical-lag", "--config", cfg]) == 2
    assert "D_st > D_sf" in capsys.readouterr().err


def test_simulate_writes_variant_csvs(tmp_path, capsys):
    cfg = _config_with(tmp_path, {"t_final = 40.0": "t_final = 5.0"})
    out = tmp_path / "out"
    rc = main(
        ["simulate", "--config", cfg, "--out", str(out),
         "--variant", "nominal", "--variant", "filtered"]
    )
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("variant=nominal") and "min_h=" in lines[0]
    assert (out / "trajectory_nominal.csv").exists()
    assert (out / "trajectory_filtered.csv").exists()
    header = (out / "trajectory_filtered.csv").read_text().splitlines()[0]
    assert header == "t,D0,v0,a0,u_nom,u_safe,u_app,h,h_e,D1,v1,v_head"


def test_simulate_rejects_coarse_dt(tmp_path, capsys):
    rc = main(["simulate", "--config", CONFIG, "--out", str(tmp_path), "--dt", "0.5"])
    assert rc == 2
    assert "dt" in capsys.readouterr().err


def test_simulate_missing_data_file(tmp_path, capsys):
    cfg = _config_with(
        tmp_path,
        {"profile = brake_resume": "profile = data\ndata_file = missing_speeds.csv"},
    )
    rc = main(["simulate", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 2
    assert "missing_speeds.csv" in capsys.readouterr().err


def test_simulate_data_profile_roundtrip(tmp_path, capsys):
    data = tmp_path / "speeds.csv"
    rows = ["t,v_head"] + [f"{0.5 * k},20" for k in range(21)]
    data.write_text("\n".join(rows) + "\n")
    cfg = _config_with(
        tmp_path,
        {
            "profile = brake_resume": f"profile = data\ndata_file = {data}",
            "t_final = 40.0": "t_final = 5.0",
        },
    )
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path), "--variant", "nominal"]) == 0
    assert "min_h=" in capsys.readouterr().out


def test_chart_small_resolution_and_determinism(tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        rc = main(
            ["chart", "--config", CONFIG, "--out", str(out),
             "--plane", "B1-BN", "--resolution", "2x2", "--svg"]
        )
        assert rc == 0
    capsys.readouterr()
    csv1 = (out1 / "chart_B1-BN_2x2.csv").read_bytes()
    csv2 = (out2 / "chart_B1-BN_2x2.csv").read_bytes()
    assert csv1 == csv2  # byte-identical across invocations
    lines = csv1.decode().splitlines()
    assert lines[0] == "x,y,plant,string,safe,sup_gain"
    assert len(lines) == 5  # header + 4 cells
    assert (out1 / "chart_B1-BN_2x2.svg").exists()
    assert (out1 / "chart_B1-BN_2x2.meta.json").exists()


def test_chart_rejects_bad_resolution(tmp_path, capsys):
    rc = main(["chart", "--config", CONFIG, "--out", str(tmp_path), "--resolution", "7"])
    assert rc == 2
    assert "resolution" in capsys.readouterr().err


def test_boundaries_types(tmp_path, capsys):
    for btype in ("plant", "string-w0", "string-wK"):
        rc = main(
            ["boundaries", "--config", CONFIG, "--out", str(tmp_path),
             "--type", btype, "--plane", "A-B1"]
        )
        assert rc == 0
    out = capsys.readouterr().out
    assert "type=plant" in out and "type=string-wK" in out
    wk = (tmp_path / "boundaries_string-wK_A-B1.csv").read_text().splitlines()
    assert wk[0] == "plane,param1,param2,x,y"
    assert len(wk) > 100
    # several curve families enter the default window, tagged by K
    ks = {line.split(",")[2] for line in wk[1:]}
    assert len(ks) >= 4


def test_boundaries_empty_K_grid(tmp_path, capsys):
    cfg = _config_with(tmp_path, {"K_count = 12": "K_count = 0"})
    rc = main(
        ["boundaries", "--config", cfg, "--out", str(tmp_path), "--type", "string-wK"]
    )
    assert rc == 2
    assert "k_count" in capsys.readouterr().err


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = _config_with(tmp_path, {"xi = 0.2": "xi = 0.2\nbogus = 1"})
    assert main(["critical-lag", "--config", cfg]) == 2
    assert "bogus" in capsys.readouterr().err


def test_unknown_config_section_rejected(tmp_path, capsys):
    cfg = _config_with(tmp_path, {"[cbf]": "[mystery]\nx = 1\n\n[cbf]"})
    assert main(["critical-lag", "--config", cfg]) == 2
    assert "mystery" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["critical-lag", "--config", str(tmp_path / "nope.ini")]) == 2


def test_outdir_env_override(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("CCC_SAFETY_OUTDIR", str(tmp_path / "envout"))
    cfg = _config_with(tmp_path, {"t_final = 40.0": "t_final = 2.0"})
    assert main(["simulate", "--config", cfg, "--variant", "nominal"]) == 0
    capsys.readouterr()
    assert (tmp_path / "envout" / "trajectory_nominal.csv").exists()
