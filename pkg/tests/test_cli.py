import os
from pathlib import Path

import pytest

from spssim.cli import main


def base_args(tmp_path, *extra):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        "[scenario]\n"
        "density_per_km_lane = 1.0\n"
        "sim_time_s = 2.0\n"
        "measurement_window_m = 2000.0\n"
    )
    return ["--config", str(cfg), "--out", str(tmp_path / "out"), *extra]


class TestSingleRun:
    def test_writes_all_artifacts(self, tmp_path, capsys):
        rc = main(base_args(tmp_path, "--seed", "4", "--trace"))
        assert rc == 0
        out = tmp_path / "out"
        for name in ("per_curve.csv", "ipg_hist.csv", "summary.txt",
                     "resolved.ini", "per_curve.png", "ipg_hist.png",
                     "grant_trace.csv"):
            assert (out / name).exists(), name
        assert "seed=4" in (out / "summary.txt").read_text()

    def test_no_figures_flag(self, tmp_path):
        rc = main(base_args(tmp_path, "--no-figures"))
        assert rc == 0
        assert not (tmp_path / "out" / "per_curve.png").exists()
        assert (tmp_path / "out" / "per_curve.csv").exists()

    def test_config_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[sps]\nt2 = 150\n")
        assert main(["--config", str(bad)]) == 2

    def test_unknown_key_exit_code(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[sps]\nwindow = 9\n")
        assert main(["--config", str(bad), "--out", str(tmp_path / "o")]) == 2

    def test_env_var_overrides_out(self, tmp_path, monkeypatch):
        env_dir = tmp_path / "from_env"
        monkeypatch.setenv("SPSSIM_OUT", str(env_dir))
        rc = main(base_args(tmp_path, "--no-figures"))
        assert rc == 0
        assert (env_dir / "summary.txt").exists()
        assert not (tmp_path / "out").exists()

    def test_resolved_config_reusable(self, tmp_path):
        rc = main(base_args(tmp_path, "--no-figures", "--seed", "9"))
        assert rc == 0
        resolved = tmp_path / "out" / "resolved.ini"
        rc2 = main(["--config", str(resolved),
                    "--out", str(tmp_path / "out2"), "--no-figures"])
        assert rc2 == 0
        a = (tmp_path / "out" / "summary.txt").read_bytes()
        b = (tmp_path / "out2" / "summary.txt").read_bytes()
        assert a == b


class TestSweep:
    def test_sweep_layout_and_combined_csv(self, tmp_path):
        rc = main(base_args(tmp_path, "--no-figures",
                            "--sweep", "sps.p_resel=0.0,1.0", "--seeds", "2"))
        assert rc == 0
        out = tmp_path / "out"
        combined = (out / "combined.csv").read_text().splitlines()
        assert combined[0].startswith("axis,value,seed,per_total")
        assert len(combined) == 1 + 4   # 2 values x 2 seeds
        for value in ("0.0", "1.0"):
            for seed in ("1", "2"):
                sub = out / f"sps_p_resel_{value}" / f"seed_{seed}"
                assert (sub / "summary.txt").exists()

    def test_sweep_matches_standalone(self, tmp_path):
        rc = main(base_args(tmp_path, "--no-figures", "--seed", "5",
                            "--sweep", "sps.p_resel=0.8", "--seeds", "1"))
        assert rc == 0
        swept = (tmp_path / "out" / "sps_p_resel_0.8" / "seed_5"
                 / "summary.txt").read_bytes()
        cfg2 = tmp_path / "solo.ini"
        cfg2.write_text(
            "[scenario]\ndensity_per_km_lane = 1.0\nsim_time_s = 2.0\n"
            "measurement_window_m = 2000.0\n\n[sps]\np_resel = 0.8\n")
        rc2 = main(["--config", str(cfg2), "--seed", "5",
                    "--out", str(tmp_path / "solo"), "--no-figures"])
        assert rc2 == 0
        assert swept == (tmp_path / "solo" / "summary.txt").read_bytes()

    def test_bad_axis_is_config_error(self, tmp_path):
        rc = main(base_args(tmp_path, "--sweep", "radio.tx_power_dbm=20,23"))
        assert rc == 2

    def test_parallel_jobs_same_output(self, tmp_path):
        rc = main(base_args(tmp_path, "--no-figures", "--jobs", "2",
                            "--sweep", "sps.p_resel=0.0,1.0", "--seeds", "2"))
        assert rc == 0
        serial_dir = tmp_path / "serial"
        rc2 = main(base_args(tmp_path, "--no-figures",
                             "--sweep", "sps.p_resel=0.0,1.0", "--seeds", "2")
                   [:-2] + ["--out", str(serial_dir),
                            "--sweep", "sps.p_resel=0.0,1.0", "--seeds", "2"])
        assert rc2 == 0
        a = (tmp_path / "out" / "combined.csv").read_bytes()
        b = (serial_dir / "combined.csv").read_bytes()
        assert a == b
