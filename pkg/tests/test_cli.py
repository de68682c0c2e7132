import csv
import io
import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from seaforge.cli import main, parse_grid


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def zero_json(tmp_path):
    path = tmp_path / "zero.json"
    path.write_text(json.dumps({"K1": {"num": [0.0], "den": [1.0]}, "K2": {"num": [0.0], "den": [1.0]}}))
    return path


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# -- verify ---------------------------------------------------------------------


def test_verify_published_pair(capsys):
    code, out, _ = run(capsys, "verify", "--controller", "hinf3", "--alpha", "0.6")
    rep = json.loads(out)
    assert code == 0 and rep["overall_pass"]
    assert {"achieved", "margin", "argmax_omega"} <= set(rep["items"][0])


def test_verify_open_loop_fails(capsys, zero_json):
    code, out, _ = run(capsys, "verify", "--controller", f"file:{zero_json}", "--alpha", "0.6")
    rep = json.loads(out)
    dt = next(i for i in rep["items"] if i["channel"] == "dt")
    assert code == 1 and not dt["pass"]
    assert dt["normalized"] == pytest.approx(6.7, abs=0.05)


def test_verify_pid_is_passive(capsys):
    code, out, _ = run(capsys, "verify", "--controller", "pid", "--alpha", "0.6")
    pas = next(i for i in json.loads(out)["items"] if i["channel"] == "passivity")
    assert pas["pass"]


def test_verify_custom_specs(capsys, tmp_path):
    path = tmp_path / "specs.json"
    path.write_text(json.dumps([{"channel": "dt", "gamma": 0.001, "band": [0, "inf"], "hard": False}]))
    code, out, _ = run(capsys, "verify", "--specs", str(path))
    assert code == 1 and len(json.loads(out)["items"]) == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--controller", "missing.json"],
        ["verify", "--alpha", "1.5"],
        ["verify", "--alpha", "0.95"],
        ["bode", "--channels", "bogus"],
        ["bode", "--grid", "10:1:3"],
    ],
)
def test_input_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_bad_controller_file(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run(capsys, "verify", "--controller", str(path))[0] == 2
    path.write_text(json.dumps({"K1": {"num": [1.0], "den": [1.0]}}))
    assert run(capsys, "verify", "--controller", str(path))[0] == 2


# -- bode ------------------------------------------------------------------------


def test_grid_contract():
    w = parse_grid("1:10:3")
    assert w.size == 4 and w[0] == 1.0 and w[-1] == pytest.approx(10.0, rel=1e-15)


def test_bode_rows_and_columns(capsys):
    code, out, _ = run(capsys, "bode", "--channels", "Zbar", "--grid", "1:10:3")
    r = rows(out)
    assert code == 0 and len(r) == 4
    assert list(r[0]) == ["omega_rad_s", "Zbar_mag_abs", "Zbar_mag_db", "Zbar_phase_deg"]


def test_bode_zbar_low_frequency(capsys, plant):
    code, out, _ = run(capsys, "bode", "--channels", "Zbar", "--grid", "1e-3:1e-1:10")
    for row in rows(out):
        w = float(row["omega_rad_s"])
        assert float(row["Zbar_mag_abs"]) * w == pytest.approx(0.6 * plant.Ks, rel=0.1)


def test_bode_zbar_phase(capsys):
    # 90.012 deg near 2.2e3 rad/s comes from the four-digit printed coefficients
    _, out, _ = run(capsys, "bode", "--channels", "Zbar")
    phase = np.array([float(r["Zbar_phase_deg"]) for r in rows(out)])
    assert np.max(np.abs(phase)) <= 90.02


def test_bode_spring_is_allpass(capsys, zero_json):
    _, out, _ = run(capsys, "bode", "--controller", str(zero_json), "--channels", "W_pass", "--grid", "1e-2:1e3:5")
    db = np.array([float(r["W_pass_mag_db"]) for r in rows(out)])
    np.testing.assert_allclose(db, 0.0, atol=1e-9)


def test_bode_file_and_manifest(capsys, tmp_path):
    out = tmp_path / "b.csv"
    assert run(capsys, "bode", "--channels", "Zbar,W_pass", "--grid", "1:10:3", "--out", str(out))[0] == 0
    man = json.loads((tmp_path / "b.csv.manifest.json").read_text())
    assert man["command"] == "bode" and man["outputs"] == [str(out)]
    first = out.read_bytes()
    run(capsys, "bode", "--channels", "Zbar,W_pass", "--grid", "1:10:3", "--out", str(out))
    assert out.read_bytes() == first


# -- synth --------------------------------------------------------------------------


def test_synth_writes_controller(capsys, tmp_path):
    out = tmp_path / "k.json"
    code, text, _ = run(capsys, "synth", "--structure", "pid", "--starts", "1", "--budget", "200", "--out", str(out))
    assert code in (0, 1)
    doc = json.loads(out.read_text())
    assert doc["structure"]["kind"] == "pid" and len(doc["structure"]["theta"]) == 3
    assert json.loads((tmp_path / "k.json.manifest.json").read_text())["seed"] == 0
    # the written controller verifies to the same verdict
    code2, text2, _ = run(capsys, "verify", "--controller", str(out))
    assert json.loads(text2)["overall_pass"] == json.loads(text)["overall_pass"]


def test_synth_seed_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SEAFORGE_SEED", "17")
    out = tmp_path / "k.json"
    run(capsys, "synth", "--structure", "pid", "--starts", "1", "--budget", "50", "--seed", "3", "--out", str(out))
    assert json.loads(out.read_text())["seed"] == 17


def test_synth_warm_start(capsys, tmp_path):
    out = tmp_path / "k.json"
    code, text, _ = run(capsys, "synth", "--warm-start", "hinf3", "--starts", "1", "--budget", "150", "--out", str(out))
    assert code == 0 and json.loads(text)["soft_level"] <= 1.0 + 1e-9


# -- sim ---------------------------------------------------------------------------


def test_sim_outputs(capsys, tmp_path):
    sc = tmp_path / "sc.json"
    sc.write_text(json.dumps({"hand_motion": {"kind": "sinusoid", "amplitude": 0.5, "freq": 1.0}, "duration": 1.0}))
    prefix = str(tmp_path / "run")
    code, out, _ = run(capsys, "sim", "--scenario", str(sc), "--out", prefix)
    assert code == 0
    data = np.loadtxt(prefix + ".csv", delimiter=",", skiprows=1)
    assert data.shape == (1001, 6)
    metrics = json.loads((tmp_path / "run_metrics.json").read_text())["metrics"]
    assert metrics["max_abs_e"] == pytest.approx(np.max(np.abs(data[:, 4])), rel=1e-15)
    man = json.loads((tmp_path / "run.manifest.json").read_text())
    assert set(man["outputs"]) == {prefix + ".csv", prefix + "_metrics.json"}


def test_sim_calibrated_chirp(capsys):
    code, out, _ = run(capsys, "sim", "--calibrate-wd", "16.7")
    m = json.loads(out)["metrics"]
    assert code == 0 and m["max_abs_wd"] == pytest.approx(16.7, rel=1e-9)
    assert 0.004 <= m["max_abs_e"] <= 0.011


def test_sim_unstable(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"K1": {"num": [0.0], "den": [1.0]}, "K2": {"num": [100.0], "den": [1.0]}}))
    sc = tmp_path / "sc.json"
    sc.write_text(json.dumps({"hand_motion": {"kind": "sinusoid", "freq": 1.0}, "duration": 0.2}))
    code, _, err = run(capsys, "sim", "--controller", str(path), "--scenario", str(sc))
    assert code == 4 and "unstable" in err
    assert run(capsys, "sim", "--controller", str(path), "--scenario", str(sc), "--allow-unstable")[0] == 0


def test_bad_scenario(capsys, tmp_path):
    sc = tmp_path / "sc.json"
    sc.write_text(json.dumps({"hand_motion": {"kind": "sawtooth"}, "duration": 1.0}))
    assert run(capsys, "sim", "--scenario", str(sc))[0] == 2


# -- entry point ---------------------------------------------------------------------


@pytest.mark.skipif(shutil.which("seaforge") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["seaforge", "verify", "--controller", "hinf3"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["overall_pass"]
