import math

import numpy as np
import pytest

from twophoton.cli import main
from twophoton.config import (
    config_from_output_header,
    parse_config_text,
    resolve_config,
)
from twophoton.errors import ConfigError

BASE = """
# small comb, synthetic units (round trip = 1 s)
comb.n_side_modes = 5
comb.round_trip_time = 1.0
comb.pump_frequency = 5000.0
comb.linewidth = {linewidth}
seed = 42
"""


def write_cfg(tmp_path, body, name="run.cfg"):
    path = tmp_path / name
    path.write_text(body, encoding="utf-8")
    return path


def read_rows(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            rows.append(line.strip().split(","))
    header, data = rows[0], rows[1:]
    cols = {name: np.array([float(r[i]) for r in data]) for i, name in enumerate(header)}
    return cols


class TestCorrelationCommand:
    def test_comb_csv(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            BASE.format(linewidth="0.0628")
            + "scan.points = 4096\nscan.tau_min_tr = -2.0\nscan.tau_max_tr = 2.0\n",
        )
        assert main(["correlation", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        cols = read_rows(tmp_path / "correlation.csv")
        assert set(cols) == {"tau_s", "gamma2", "coherence_abs"}
        peak = cols["gamma2"].max()
        i0 = np.argmin(np.abs(cols["tau_s"]))
        # 4096 points straddle tau = 0 by half a step
        assert cols["gamma2"][i0] == pytest.approx(121.0, rel=2e-3)
        # revivals at +-t_r within a grid step
        step = cols["tau_s"][1] - cols["tau_s"][0]
        for target in (-1.0, 1.0):
            window = np.abs(cols["tau_s"] - target) < 0.1
            arg = cols["tau_s"][window][np.argmax(cols["gamma2"][window])]
            assert abs(arg - target) <= step + 1e-12
        assert peak < 122.0

    def test_single_mode_single_peak(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            "comb.n_side_modes = 0\ncomb.round_trip_time = 1.0\n"
            "comb.pump_frequency = 5000.0\ncomb.linewidth = 0.0628\n"
            "scan.points = 1024\n",
        )
        assert main(["correlation", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        cols = read_rows(tmp_path / "correlation.csv")
        # one global maximum at zero, monotone decay outward
        assert abs(cols["tau_s"][np.argmax(cols["gamma2"])]) < 2e-3

    def test_unresolved_comb_is_a_config_error(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, BASE.format(linewidth="3.15"))
        assert main(["correlation", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "resolved" in capsys.readouterr().err

    def test_unknown_key_is_named(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, BASE.format(linewidth="0.0628") + "comb.bogus = 1\n")
        assert main(["correlation", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "comb.bogus" in capsys.readouterr().err

    def test_nyquist_violation_exits_3(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, BASE.format(linewidth="0.0628") + "scan.points = 16\n")
        assert main(["correlation", "--config", str(cfg), "--out", str(tmp_path)]) == 3
        assert "GridError" in capsys.readouterr().err


class TestHomscanCommand:
    def test_dithered_dips(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            BASE.format(linewidth="0.1885")
            + "detector.resolution_time = 2000.0\nscan.points = 105\n"
            + "scan.delay_min_tr = 0.0\nscan.delay_max_tr = 1.3\n"
            + "output.delay_to_mm = 149.9\n",
        )
        assert main(["homscan", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        cols = read_rows(tmp_path / "homscan.csv")
        assert "position_mm" in cols
        np.testing.assert_allclose(cols["position_mm"], cols["delay_s"] * 149.9, rtol=1e-12)
        coinc = cols["coincidence"]
        assert coinc.min() >= 0.49  # wings-normalized; the mean carries permil bias
        dip_delays = cols["delay_s"][coinc < 0.75]
        # revivals cluster at 0, t_r/2, t_r
        assert np.all(
            np.min(np.abs(dip_delays[:, None] - np.array([0.0, 0.5, 1.0])[None, :]), axis=1) < 0.05
        )

    def test_random_phase_comb_runs(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            BASE.format(linewidth="0.1885")
            + "comb.phase_seed = 9\ndetector.resolution_time = 2000.0\nscan.points = 33\n",
        )
        assert main(["homscan", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        header = config_from_output_header(tmp_path / "homscan.csv")
        assert "comb.mode_phases" in header  # resolved phases echoed explicitly


class TestFringeCommand:
    def test_full_round_trip_fringes(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            BASE.format(linewidth="0.0628")
            + "detector.resolution_time = 2000.0\nscan.delay_tr = 1.0\nscan.points = 81\n",
        )
        assert main(["fringe", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        cols = read_rows(tmp_path / "fringe.csv")
        np.testing.assert_allclose(cols["singles_1"] + cols["singles_2"], 2.0, atol=1e-12)
        header_results = {}
        with open(tmp_path / "fringe.csv") as fh:
            for line in fh:
                if line.startswith("# result."):
                    key, val = line[2:].split(" = ")
                    header_results[key] = float(val)
        assert header_results["result.fit_visibility_singles_1"] == pytest.approx(
            math.exp(-0.0628), rel=1e-6
        )

    def test_half_round_trip_flat_singles(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            BASE.format(linewidth="0.0628")
            + "detector.resolution_time = 2000.0\nscan.delay_tr = 0.5\nscan.points = 81\n",
        )
        assert main(["fringe", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        cols = read_rows(tmp_path / "fringe.csv")
        singles_spread = cols["singles_1"].max() - cols["singles_1"].min()
        assert singles_spread < 0.2  # small for N=5; vanishes as the comb grows
        coinc = cols["coincidence"]
        vis = (coinc.max() - coinc.min()) / (coinc.max() + coinc.min())
        assert vis > 0.5


class TestEngineerCommand:
    def test_solution_and_traces(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            BASE.format(linewidth="0.0628")
            + "engineering.target_peak = 1\nscan.points = 16384\n",
        )
        assert main(["engineer", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        solution = {}
        with open(tmp_path / "engineer_solution.txt") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, val = line.split(" = ")
                solution[key] = val
        assert float(solution["residual"]) < 1e-3
        assert float(solution["neighbor_retention_0"]) >= 0.9
        assert float(solution["neighbor_retention_2"]) >= 0.9
        before = read_rows(tmp_path / "engineer_before.csv")
        after = read_rows(tmp_path / "engineer_after.csv")
        near_peak = np.abs(before["tau_s"] - 1.0) < 0.25
        assert after["gamma2"][near_peak].max() < 1e-3 * before["gamma2"][near_peak].max()


class TestMcCommand:
    def mc_cfg(self, tmp_path, extra=""):
        return write_cfg(
            tmp_path,
            BASE.format(linewidth="0.0628")
            + "detector.resolution_time = 0.0\ndetector.coincidence_window = 100.0\n"
            + "scan.points = 65537\nmc.n_events = 20000\nmc.bin_width = 0.01\n"
            + "mc.range_min = -2.5\nmc.range_max = 2.5\nmc.duration = 1000.0\n"
            + extra,
        )

    def test_histogram_and_summary(self, tmp_path):
        cfg = self.mc_cfg(tmp_path)
        assert main(["mc", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        cols = read_rows(tmp_path / "mc_histogram.csv")
        assert cols["count"].sum() == 20000
        summary = (tmp_path / "mc_summary.txt").read_text()
        assert "n_pair_records = 20000" in summary
        assert "comb_contrast" in summary
        contrast = float(
            [l for l in summary.splitlines() if l.startswith("comb_contrast")][0].split(" = ")[1]
        )
        assert contrast > 0.95

    def test_thread_count_does_not_change_bytes(self, tmp_path):
        cfg = self.mc_cfg(tmp_path)
        out1 = tmp_path / "t1"
        out4 = tmp_path / "t4"
        assert main(["mc", "--config", str(cfg), "--out", str(out1), "--threads", "1"]) == 0
        assert main(["mc", "--config", str(cfg), "--out", str(out4), "--threads", "4"]) == 0
        assert (out1 / "mc_histogram.csv").read_bytes() == (out4 / "mc_histogram.csv").read_bytes()
        assert (out1 / "mc_summary.txt").read_bytes() == (out4 / "mc_summary.txt").read_bytes()

    def test_seed_changes_the_stream(self, tmp_path):
        cfg = self.mc_cfg(tmp_path)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["mc", "--config", str(cfg), "--out", str(out_a), "--seed", "1"]) == 0
        assert main(["mc", "--config", str(cfg), "--out", str(out_b), "--seed", "2"]) == 0
        assert (out_a / "mc_histogram.csv").read_bytes() != (out_b / "mc_histogram.csv").read_bytes()


class TestRoundTrip:
    def roundtrip(self, tmp_path, command, cfg_path, filename):
        first = tmp_path / "first"
        second = tmp_path / "second"
        assert main([command, "--config", str(cfg_path), "--out", str(first)]) == 0
        header = config_from_output_header(first / filename)
        replay = tmp_path / "replay.cfg"
        replay.write_text(
            "\n".join(f"{k} = {v}" for k, v in header.items()) + "\n", encoding="utf-8"
        )
        assert main([command, "--config", str(replay), "--out", str(second)]) == 0
        assert (first / filename).read_bytes() == (second / filename).read_bytes()

    def test_correlation_roundtrip(self, tmp_path):
        cfg = write_cfg(
            tmp_path, BASE.format(linewidth="0.0628") + "scan.points = 512\n"
        )
        self.roundtrip(tmp_path, "correlation", cfg, "correlation.csv")

    def test_mc_roundtrip(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            BASE.format(linewidth="0.0628")
            + "detector.resolution_time = 0.0\ndetector.coincidence_window = 100.0\n"
            + "scan.points = 16385\nmc.n_events = 5000\nmc.duration = 500.0\n",
        )
        self.roundtrip(tmp_path, "mc", cfg, "mc_histogram.csv")


class TestConfigParsing:
    def test_ordinary_frequency_convention(self):
        raw = parse_config_text(
            "units.frequency = ordinary\ncomb.mode_spacing = 1.0e12\n"
            "comb.pump_frequency = 5.0e14\ncomb.linewidth = 1.0e10\n"
        )
        cfg = resolve_config(raw, "correlation")
        assert cfg.comb.mode_spacing == pytest.approx(2 * math.pi * 1e12)
        assert cfg.comb.round_trip_time == pytest.approx(1e-12)

    def test_round_trip_time_alternative(self):
        cfg = resolve_config(parse_config_text("comb.round_trip_time = 2.0e-12\n"), "correlation")
        assert cfg.comb.mode_spacing == pytest.approx(math.pi * 1e12)

    def test_conflicting_spacing_inputs(self):
        raw = parse_config_text("comb.mode_spacing = 1.0\ncomb.round_trip_time = 1.0\n")
        with pytest.raises(ConfigError, match="not both"):
            resolve_config(raw, "correlation")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("seed = 1\nseed = 2\n")

    def test_malformed_line_has_line_number(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config_text("seed = 1\nnot a config line\n")

    def test_keys_from_other_commands_rejected(self):
        raw = parse_config_text("mc.n_events = 10\n")
        with pytest.raises(ConfigError, match="not valid"):
            resolve_config(raw, "correlation")

    def test_phase_seed_conflicts_with_phases(self):
        raw = parse_config_text("comb.mode_phases = 0,0,0\ncomb.phase_seed = 1\n")
        with pytest.raises(ConfigError, match="not both"):
            resolve_config(raw, "correlation")
