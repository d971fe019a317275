import json
import subprocess
import sys

import numpy as np
import pytest

from ceitsim.cli import main

TINY_SPECTRUM = {
    "params": {"kappa": 0.4, "g": 1.2, "omega_c": 1.0, "n_th": 0.5},
    "cutoffs": {"photon": 2, "phonon": 6},
    "grid": {"n_points": 81},
}

TINY_CALIBRATE = {
    "params": {"kappa": 0.4, "g": 1.2, "omega_c": 1.0, "omega_sec": 10.0,
               "gamma_b": 0.1},
    "temps_k": [1.5e-4, 2.2e-4, 3.2e-4, 4.5e-4, 6.0e-4, 8.0e-4, 1.05e-3, 1.35e-3],
    "n_points": 61,
}


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def run_cli(args):
    return main([str(a) for a in args])


class TestSpectrumCommand:
    def test_writes_csv_and_meta(self, tmp_path):
        cfg = write_config(tmp_path, TINY_SPECTRUM)
        out = tmp_path / "out"
        assert run_cli(["spectrum", "--config", cfg, "--out", out]) == 0
        lines = (out / "spectrum.csv").read_text().splitlines()
        assert lines[0] == "detuning_mhz,transmission_raw,transmission_normalized"
        assert len(lines) == 82
        meta = json.loads((out / "meta.json").read_text())
        assert meta["command"] == "spectrum"
        assert meta["central_fwhm_mhz"] > 0
        assert meta["resolved_params"]["dims"] == [3, 2, 6]
        assert meta["normalization"]["empty_cavity_fwhm_mhz"] == pytest.approx(0.8)

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_config(tmp_path, TINY_SPECTRUM)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run_cli(["spectrum", "--config", cfg, "--out", out1]) == 0
        assert run_cli(["spectrum", "--config", cfg, "--out", out2]) == 0
        assert (out1 / "spectrum.csv").read_bytes() == (out2 / "spectrum.csv").read_bytes()
        assert (out1 / "meta.json").read_bytes() == (out2 / "meta.json").read_bytes()

    def test_unknown_key_rejected_without_partial_files(self, tmp_path, capsys):
        bad = dict(TINY_SPECTRUM)
        bad["detunings"] = [1, 2, 3]
        cfg = write_config(tmp_path, bad)
        out = tmp_path / "out"
        assert run_cli(["spectrum", "--config", cfg, "--out", out]) == 2
        assert "detunings" in capsys.readouterr().err
        assert not out.exists()

    def test_bad_value_reports_field_path(self, tmp_path, capsys):
        bad = {"params": {"kappa": -1.0}}
        cfg = write_config(tmp_path, bad)
        assert run_cli(["spectrum", "--config", cfg, "--out", tmp_path / "o"]) == 2
        assert "config.params" in capsys.readouterr().err

    def test_invalid_json_rejected(self, tmp_path):
        cfg = tmp_path / "nope.json"
        cfg.write_text("{not json")
        assert run_cli(["spectrum", "--config", cfg, "--out", tmp_path / "o"]) == 2

    def test_missing_config_file(self, tmp_path):
        assert run_cli(["spectrum", "--config", tmp_path / "absent.json",
                        "--out", tmp_path / "o"]) == 2


class TestCalibrateAndInvert:
    @pytest.fixture(scope="class")
    def calibration_dir(self, tmp_path_factory):
        tmp = tmp_path_factory.mktemp("cal")
        cfg = write_config(tmp, TINY_CALIBRATE)
        out = tmp / "out"
        assert run_cli(["calibrate", "--config", cfg, "--out", out]) == 0
        return out

    def test_calibration_outputs(self, calibration_dir):
        lines = (calibration_dir / "calibration.csv").read_text().splitlines()
        assert lines[0] == "temperature_k,n_th,nbar_steady,fwhm_mhz"
        assert len(lines) == 9
        meta = json.loads((calibration_dir / "meta.json").read_text())
        span = meta["monotone_range"]
        assert span[1] - span[0] >= 4

    def test_invert_round_trip(self, calibration_dir, tmp_path, capsys):
        rows = (calibration_dir / "calibration.csv").read_text().splitlines()[1:]
        mid = rows[len(rows) // 2].split(",")
        cfg = write_config(tmp_path, {
            "calibration_csv": str(calibration_dir / "calibration.csv"),
            "measured_fwhm_mhz": float(mid[3]),
        })
        out = tmp_path / "inv"
        assert run_cli(["invert", "--config", cfg, "--out", out]) == 0
        report = json.loads((out / "invert.json").read_text())
        assert report["temperature_k"] == pytest.approx(float(mid[0]), rel=1e-6)
        assert report["nbar"] == pytest.approx(float(mid[1]), rel=1e-3)
        assert "sensitivity_k_per_mhz" in report

    def test_invert_out_of_range_exit_code(self, calibration_dir, tmp_path):
        cfg = write_config(tmp_path, {
            "calibration_csv": str(calibration_dir / "calibration.csv"),
            "measured_fwhm_mhz": 50.0,
        })
        assert run_cli(["invert", "--config", cfg, "--out", tmp_path / "inv"]) == 4


class TestOtherCommands:
    def test_map2d(self, tmp_path):
        cfg = write_config(tmp_path, {
            "params": {"kappa": 0.4},
            "cutoffs": {"photon": 2, "phonon": 6},
            "g_grid": [1.2], "omega_c_grid": [1.0], "n_th_values": [0.5],
            "n_points": 61,
        })
        out = tmp_path / "out"
        assert run_cli(["map2d", "--config", cfg, "--out", out]) == 0
        lines = (out / "map2d.csv").read_text().splitlines()
        assert lines[0] == "g_mhz,omega_c_mhz,n_th,fwhm_mhz,fwhm_ratio"
        assert len(lines) == 2
        fields = lines[1].split(",")
        assert float(fields[3]) > 0

    def test_multiion(self, tmp_path):
        cfg = write_config(tmp_path, {
            "params": {"kappa": 0.4, "g": 0.2, "omega_c": 1.0, "n_th": 0.5},
            "cutoffs": {"photon": 2, "phonon": 6},
            "n_ions": [1, 2],
            "n_points": 61,
        })
        out = tmp_path / "out"
        assert run_cli(["multiion", "--config", cfg, "--out", out]) == 0
        lines = (out / "multiion.csv").read_text().splitlines()
        assert lines[0] == "n_ions,g_eff_mhz,fwhm_mhz,fwhm_scaled"
        w1 = float(lines[1].split(",")[2])
        w2 = float(lines[2].split(",")[2])
        assert w2 < w1

    def test_sideband_ratio(self, tmp_path):
        cfg = write_config(tmp_path, {
            "eta_values": [0.05], "n_values": [1], "omega": 1.0, "gamma": 5.0,
        })
        out = tmp_path / "out"
        assert run_cli(["sideband", "ratio", "--config", cfg, "--out", out]) == 0
        lines = (out / "sideband_ratio.csv").read_text().splitlines()
        assert lines[0].startswith("eta,n,pulse_time_us,p_rsb,p_bsb,ratio")
        ratio = float(lines[1].split(",")[5])
        assert ratio == pytest.approx(0.5, rel=0.05)

    def test_sideband_rabi(self, tmp_path):
        cfg = write_config(tmp_path, {
            "eta": 0.2, "omega": 1.0, "gamma": 0.02,
            "t_max": 40.0, "n_times": 161, "n_phonon": 4,
        })
        out = tmp_path / "out"
        assert run_cli(["sideband", "rabi", "--config", cfg, "--out", out]) == 0
        meta = json.loads((out / "meta.json").read_text())
        assert meta["fitted_coupling_mhz"] == pytest.approx(0.2, rel=0.02)
        header = (out / "sideband_trace.csv").read_text().splitlines()[0]
        assert header.split(",")[0] == "time_us"
        assert "p_e_total" in header

    def test_sideband_cool(self, tmp_path):
        cfg = write_config(tmp_path, {
            "eta": 0.2, "omega": 2.0, "gamma": 4.0,
            "steps": [["rsb", 60.0]], "initial_phonon": 3, "n_phonon": 6,
            "samples_per_step": 40,
        })
        out = tmp_path / "out"
        assert run_cli(["sideband", "cool", "--config", cfg, "--out", out]) == 0
        meta = json.loads((out / "meta.json").read_text())
        assert meta["final_ground_motional_population"] > 0.9

    def test_analytic_curve(self, tmp_path):
        cfg = write_config(tmp_path, {
            "params": {"kappa": 0.4, "g": 1.2, "omega_c": 1.0},
            "mode": "curve", "grid": {"n_points": 101},
        })
        out = tmp_path / "out"
        assert run_cli(["analytic", "--config", cfg, "--out", out]) == 0
        lines = (out / "analytic.csv").read_text().splitlines()
        assert lines[0] == "detuning_mhz,transmission"
        meta = json.loads((out / "meta.json").read_text())
        assert meta["fwhm_mhz"] > 0


def test_console_module_entry():
    proc = subprocess.run([sys.executable, "-m", "ceitsim", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "spectrum" in proc.stdout
