import hashlib
import locale
import os
import subprocess
import sys

import numpy as np
import pytest

from photon_events.cli import main
from photon_events.experiments import fit_and_compare
from photon_events.io import read_profile, screen_units, write_profile


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ------------------------------------------------------------------ files

def test_three_windows_four_lines(tmp_path):
    p = write_profile(tmp_path / "x.csv", [1.0, 2.0, 3.0], [1, 2, 3], [4, 5, 6])
    lines = p.read_bytes().split(b"\n")
    assert lines[-1] == b"" and len(lines) == 5
    assert lines[0] == b"position,clicks,received"


def test_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    pos = np.sort(rng.uniform(-57, 57, 30))
    clicks = rng.integers(0, 1000, 30)
    received = clicks + rng.integers(0, 1000, 30)
    oracle = rng.uniform(0, 1, 30)
    p = write_profile(tmp_path / "r.csv", pos, clicks, received, oracle)
    back = read_profile(p)
    assert np.array_equal(back["clicks"], clicks) and np.array_equal(back["received"], received)
    assert np.allclose(back["position"], pos, rtol=1e-8, atol=0)
    assert np.allclose(back["oracle_value"], oracle, rtol=1e-8, atol=0)
    # values already at nine digits survive unchanged
    again = write_profile(tmp_path / "s.csv", back["position"], back["clicks"], back["received"], back["oracle_value"])
    assert again.read_bytes() == p.read_bytes()


def test_write_rejects_empty_and_ragged(tmp_path):
    with pytest.raises(ValueError):
        write_profile(tmp_path / "e.csv", [])
    with pytest.raises(ValueError):
        write_profile(tmp_path / "e.csv", [1.0, 2.0], clicks=[1])


def test_units():
    assert screen_units(True, [np.pi / 2])[0] == pytest.approx(90.0)
    assert screen_units(False, [1e-3])[0] == pytest.approx(1.0)


def test_locale_does_not_change_output(tmp_path):
    ref = write_profile(tmp_path / "a.csv", [0.5, 1.25], oracle=[0.125, 1e-12]).read_bytes()
    for name in ("de_DE.UTF-8", "fr_FR.UTF-8", "de_DE", "C.UTF-8"):
        try:
            locale.setlocale(locale.LC_ALL, name)
        except locale.Error:
            continue
        try:
            out = write_profile(tmp_path / "b.csv", [0.5, 1.25], oracle=[0.125, 1e-12]).read_bytes()
        finally:
            locale.setlocale(locale.LC_ALL, "C")
        assert out == ref
    assert b"," not in ref.split(b"\n")[1].replace(b",", b"", 1)


# -------------------------------------------------------------------- cli

def test_run_twice_identical(tmp_path):
    for sub in ("a", "b"):
        assert main(["run", "presets/fig6a.cfg", "--seed", "42", "--events", "20000",
                     "--out", str(tmp_path / sub), "--quiet"]) == 0
    for name in ("fig6a.csv", "fig6a.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    table = read_profile(tmp_path / "a" / "fig6a.csv")
    assert len(table["position"]) == 1000
    assert table["position"][0] == pytest.approx(-57 + 0.057)


def test_seed_changes_output(tmp_path):
    main(["run", "presets/fig6a.cfg", "--seed", "1", "--events", "5000", "--out", str(tmp_path / "a"), "--quiet"])
    main(["run", "presets/fig6a.cfg", "--seed", "2", "--events", "5000", "--out", str(tmp_path / "b"), "--quiet"])
    assert digest(tmp_path / "a" / "fig6a.csv") != digest(tmp_path / "b" / "fig6a.csv")


def test_oracle_and_compare(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["oracle", "presets/fig6a.cfg", "--out", out, "--quiet"]) == 0
    ref = read_profile(tmp_path / "fig6a_oracle.csv")
    assert set(ref) == {"position", "oracle_value"}
    assert ref["oracle_value"].max() == pytest.approx(1.0, abs=1e-3)
    assert main(["run", "presets/fig6a.cfg", "--events", "50000", "--no-oracle", "--out", out, "--quiet"]) == 0
    capsys.readouterr()
    assert main(["compare", str(tmp_path / "fig6a.csv"), str(tmp_path / "fig6a_oracle.csv")]) == 0
    line = capsys.readouterr().out.strip()
    sim = read_profile(tmp_path / "fig6a.csv")
    cmp = fit_and_compare(sim["clicks"], ref["oracle_value"])
    assert line == (f"scale={cmp.scale:.9g} rms={cmp.rms:.9g} "
                    f"visibility_sim={cmp.visibility_sim:.9g} visibility_oracle={cmp.visibility_oracle:.9g}")


def test_sweep_transient_ensemble(tmp_path):
    out = str(tmp_path)
    assert main(["sweep", "presets/fig8_Ia.cfg", "--events", "20000", "--out", out, "--quiet"]) == 0
    assert sorted(p.name for p in tmp_path.glob("fig8_Ia_sweeps*.csv")) == [
        "fig8_Ia_sweeps1.csv", "fig8_Ia_sweeps100.csv", "fig8_Ia_sweeps25.csv", "fig8_Ia_sweeps50.csv"]
    assert main(["transient", "presets/fig9.cfg", "--events", "50", "--out", out, "--quiet"]) == 0
    lines = (tmp_path / "fig9.csv").read_text().splitlines()
    assert lines[0] == "k,I_sqrt,I_half,I_full,II_sqrt,II_half,II_full" and len(lines) == 51
    assert main(["ensemble", "presets/fig6a.cfg", "--events", "3", "--out", out, "--quiet"]) == 0
    assert read_profile(tmp_path / "fig6a_ensemble.csv")["clicks"].sum() == 3


def test_too_few_sweep_events_is_config_error(tmp_path, capsys):
    code = main(["sweep", "presets/fig8_Ia.cfg", "--events", "1000", "--out", str(tmp_path)])
    assert code == 2
    assert "n_sweeps" in capsys.readouterr().err


def test_bad_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[source]\nkind = point\nlambda_nm = 670\n[geometry]\nkind = circular\nX_mm = 1\nY_mm = 2\n")
    assert main(["run", str(bad), "--out", str(tmp_path)]) == 2
    assert "Y_mm" in capsys.readouterr().err


def test_runtime_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "tir.cfg"
    cfg.write_text(
        "[source]\nkind = gaussian_line\nlambda_nm = 670\nsigma_mm = 1\nbeta_min_deg = -0.5\nbeta_max_deg = 0.5\n"
        "[geometry]\nkind = biprism\nX_mm = 60\nXprime_mm = 45\nalpha_deg = 80\nn_refr = 1.8\n"
        "[detector]\ncount = 10\nlow_mm = -1\nhigh_mm = 1\n"
        "[model]\ndlm = I\nclick = a\n[run]\nemitted = 100\n"
    )
    assert main(["run", str(cfg), "--out", str(tmp_path), "--no-oracle"]) == 3
    assert "(event " in capsys.readouterr().err


def test_env_seed_and_locale_in_subprocess(tmp_path):
    outs = []
    for i, lc in enumerate(("C", "de_DE.UTF-8")):
        env = dict(os.environ, PHOTON_EVENTS_SEED="5", LC_ALL=lc, LANG=lc)
        d = tmp_path / str(i)
        subprocess.run([sys.executable, "-m", "photon_events.cli", "run", "presets/fig6b.cfg", "--events", "3000",
                        "--out", str(d), "--quiet"], check=True, env=env)
        outs.append((d / "fig6b.csv").read_bytes())
    assert outs[0] == outs[1]
