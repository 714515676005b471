import json
from pathlib import Path

import pytest

from bletrack.cli import run
from bletrack.ingest import load_registry, save_registry
from bletrack.pathloss import PathLossParams, distance_to_rssi


def read_bytes_map(directory, pattern):
    return {p.name: p.read_bytes() for p in sorted(Path(directory).glob(pattern))}


class TestSimulateEvaluate:
    def test_end_to_end_smoke(self, small_sim_dir):
        for name in ("hits.csv", "imu_s1.csv", "truth.csv", "plan.json", "registry.json", "metadata.json"):
            assert (small_sim_dir / name).exists()
        assert run(["evaluate", "--in", str(small_sim_dir)]) == 0
        report = json.loads((small_sim_dir / "report.json").read_text())
        for method in ("baseline", "ble_only", "ble_imu"):
            m = report["methods"][method]
            assert m["mean_error_m"] is not None
            assert 0 <= m["availability_pct"] <= 100
            assert 0 <= m["room_accuracy_pct"] <= 100

    def test_seed_override_changes_output(self, small_scenario_file, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(["simulate", "--scenario", str(small_scenario_file), "--out", str(a), "--seed", "1"]) == 0
        assert run(["simulate", "--scenario", str(small_scenario_file), "--out", str(b), "--seed", "2"]) == 0
        assert (a / "hits.csv").read_bytes() != (b / "hits.csv").read_bytes()

    def test_byte_identical_reruns(self, small_scenario_file, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["simulate", "--scenario", str(small_scenario_file), "--out", str(out)]) == 0
            assert run(["evaluate", "--in", str(out)]) == 0
        for name in ("hits.csv", "truth.csv", "report.json", "imu_s1.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestLocalize:
    def test_writes_all_method_tracks(self, small_sim_dir, tmp_path):
        out = tmp_path / "tracks"
        assert run(["localize", "--in", str(small_sim_dir), "--out", str(out)]) == 0
        names = {p.name for p in out.glob("*.csv")}
        assert names == {
            "track_baseline_b1.csv",
            "track_adaptive_b1.csv",
            "track_fused_b1.csv",
        }

    def test_explicit_flags_equal_defaults(self, small_sim_dir, tmp_path):
        out_default = tmp_path / "default"
        out_flags = tmp_path / "flags"
        assert run(["localize", "--in", str(small_sim_dir), "--out", str(out_default)]) == 0
        assert run(
            ["localize", "--in", str(small_sim_dir), "--out", str(out_flags),
             "--window", "10", "--stride", "1"]
        ) == 0
        assert read_bytes_map(out_default, "*.csv") == read_bytes_map(out_flags, "*.csv")

    def test_offset_shifts_track_timestamps(self, small_sim_dir, tmp_path):
        out_plain = tmp_path / "plain"
        out_shift = tmp_path / "shift"
        assert run(["localize", "--in", str(small_sim_dir), "--out", str(out_plain)]) == 0
        assert run(
            ["localize", "--in", str(small_sim_dir), "--out", str(out_shift),
             "--offset", "hits=100"]
        ) == 0
        first_plain = (out_plain / "track_adaptive_b1.csv").read_text().splitlines()[1]
        first_shift = (out_shift / "track_adaptive_b1.csv").read_text().splitlines()[1]
        assert float(first_shift.split(",")[0]) == float(first_plain.split(",")[0]) + 100.0

    def test_bad_offset_is_data_error(self, small_sim_dir, tmp_path):
        assert run(
            ["localize", "--in", str(small_sim_dir), "--out", str(tmp_path / "x"),
             "--offset", "nonsense"]
        ) == 3

    def test_window_flag_changes_tracks(self, small_sim_dir, tmp_path):
        out_default = tmp_path / "default"
        out_wide = tmp_path / "wide"
        assert run(["localize", "--in", str(small_sim_dir), "--out", str(out_default)]) == 0
        assert run(
            ["localize", "--in", str(small_sim_dir), "--out", str(out_wide), "--window", "20"]
        ) == 0
        assert (
            (out_default / "track_adaptive_b1.csv").read_bytes()
            != (out_wide / "track_adaptive_b1.csv").read_bytes()
        )


class TestCalibrate:
    def test_updates_exponent(self, tmp_path):
        reg_path = tmp_path / "registry.json"
        from conftest import small_registry

        save_registry(reg_path, small_registry())
        gen = PathLossParams(-70, 3.1)
        samples_path = tmp_path / "samples.csv"
        rows = ["distance_m,rssi_db"] + [
            f"{d},{distance_to_rssi(gen, d)}" for d in (2.0, 5.0, 9.0)
        ]
        samples_path.write_text("\n".join(rows) + "\n")
        out_path = tmp_path / "registry_out.json"
        assert run(
            ["calibrate", "--registry", str(reg_path),
             "--samples", f"a={samples_path}", "--out", str(out_path)]
        ) == 0
        updated = load_registry(out_path)
        assert updated.params_of("a").n_factor == pytest.approx(3.1, abs=1e-9)
        assert updated.params_of("b").n_factor == 2.0  # untouched


class TestCoverage:
    def test_writes_grids(self, small_scenario_file, tmp_path):
        out = tmp_path / "cov"
        assert run(
            ["coverage", "--scenario", str(small_scenario_file), "--out", str(out),
             "--dwell", "5", "--points", "25"]
        ) == 0
        assert (out / "probes.csv").exists()
        for metric in ("hit_count", "unique_devices", "mean_rssi"):
            assert (out / f"coverage_{metric}.csv").exists()
            assert (out / f"coverage_{metric}.pgm").read_bytes().startswith(b"P5")


class TestExitCodes:
    def test_unknown_flag_usage_error(self):
        assert run(["simulate", "--nonsense"]) == 2

    def test_unknown_subcommand_usage_error(self):
        assert run(["frobnicate"]) == 2

    def test_no_subcommand_usage_error(self):
        assert run([]) == 2

    def test_missing_file_data_error(self, tmp_path):
        assert run(["simulate", "--scenario", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 3

    def test_bad_scenario_schema_data_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{\"seed\": 1}")
        assert run(["simulate", "--scenario", str(bad), "--out", str(tmp_path / "o")]) == 3

    def test_help_exits_zero(self, capsys):
        assert run(["--help"]) == 0
        assert "simulate" in capsys.readouterr().out

    def test_show_config(self, capsys):
        assert run(["--show-config"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["evaluate"]["window_s"] == 10.0
        assert doc["pdr"]["step_length_m"] == 0.7
        assert doc["simulate"]["ble_rate_hz"] == 2.0
