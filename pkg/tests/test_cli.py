import json
import warnings
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from pigtailsim.budget import EfficiencyBudget, write_budget_file
from pigtailsim.cli import main
from pigtailsim.coupling import CouplingMap
from pigtailsim.photons import SourceParams, simulate_stream
from pigtailsim.spectra import synth_reflectivity
from pigtailsim.modes import DeviceSpec


@pytest.fixture()
def runner():
    return CliRunner()


def run_ok(runner, args):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


class TestCouplingMapCommand:
    def test_default_map_reproduces_peak_coupling(self, runner, tmp_path):
        run_ok(
            runner,
            ["--out", str(tmp_path), "coupling-map", "--offset-max", "0.0",
             "--gaps", "0.23", "--diameter-step", "0.25"],
        )
        cmap = CouplingMap.from_csv(tmp_path / "coupling_map.csv")
        best = cmap.efficiency[:, 0, 0].max()
        assert best == pytest.approx(0.96, abs=0.02)

    def test_binary_option_writes_grid(self, runner, tmp_path):
        run_ok(
            runner,
            ["--out", str(tmp_path), "coupling-map", "--binary",
             "--gaps", "1.0", "--diameter-step", "0.5", "--offset-max", "0.4",
             "--offset-step", "0.4"],
        )
        cmap = CouplingMap.from_binary(tmp_path / "coupling_map.cmap")
        csv_map = CouplingMap.from_csv(tmp_path / "coupling_map.csv")
        np.testing.assert_allclose(cmap.efficiency, csv_map.efficiency, rtol=1e-7)


class TestAlignDemo:
    def test_seeded_run_emits_report_and_log(self, runner, tmp_path):
        result = run_ok(runner, ["--seed", "9", "--out", str(tmp_path), "align-demo"])
        report = json.loads((tmp_path / "alignment_report.json").read_text())
        assert report["success"]
        assert report["residual_offset_um"] < 0.2
        log_lines = (tmp_path / "alignment_events.ndjson").read_text().strip().split("\n")
        assert json.loads(log_lines[0])["event"] == "session-created"
        assert "success=True" in result.output

    def test_fixed_seed_outputs_are_byte_identical(self, runner, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run_ok(runner, ["--seed", "13", "--out", str(out_a), "align-demo"])
        run_ok(runner, ["--seed", "13", "--out", str(out_b), "align-demo"])
        for name in ("alignment_report.json", "alignment_events.ndjson"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


class TestCooldownDemo:
    def test_series_shows_blue_shift_and_cold_gap(self, runner, tmp_path):
        run_ok(
            runner,
            ["--seed", "4", "--out", str(tmp_path), "cooldown-demo",
             "--steps", "8"],
        )
        lines = (tmp_path / "cooldown_series.csv").read_text().strip().split("\n")
        rows = [tuple(float(v) for v in line.split(",")) for line in lines[1:]]
        temps = [r[0] for r in rows]
        lams = [r[2] for r in rows]
        assert temps == sorted(temps, reverse=True)
        assert all(a >= b for a, b in zip(lams, lams[1:]))
        assert rows[-1][1] == pytest.approx(3.5, abs=0.2)
        assert (tmp_path / "cold_spectrum.csv").exists()


class TestAnalyzeSpectrum:
    def test_round_trip_against_synthesizer(self, runner, tmp_path):
        spectrum = synth_reflectivity(DeviceSpec(), 3.5, noise_rel=0.003, rng=7)
        spec_path = tmp_path / "lab_spectrum.csv"
        spectrum.to_csv(spec_path)
        run_ok(runner, ["--out", str(tmp_path), "analyze-spectrum", str(spec_path)])
        report = json.loads((tmp_path / "spectrum_analysis.json").read_text())
        assert report["gap"]["gap_um"] == pytest.approx(3.5, abs=0.05)
        assert report["dips"][0]["found"]

    def test_missing_file_exit_code(self, runner, tmp_path):
        result = runner.invoke(
            main, ["--out", str(tmp_path), "analyze-spectrum", "nope.csv"]
        )
        assert result.exit_code == 3

    def test_bad_format_exit_code(self, runner, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("not,a,spectrum\n1,2,3\n")
        result = runner.invoke(
            main, ["--out", str(tmp_path), "analyze-spectrum", str(bad)]
        )
        assert result.exit_code == 4


class TestAnalyzeTags:
    def test_hbt_and_hom_files(self, runner, tmp_path):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            hbt = simulate_stream(SourceParams(), 400_000, seed=1, kind="hbt")
            hom = simulate_stream(SourceParams(), 400_000, seed=2, kind="hom")
        hbt_path, hom_path = tmp_path / "run.hbt.ptag", tmp_path / "run.hom.ptag"
        hbt.to_binary(hbt_path)
        hom.to_binary(hom_path)
        run_ok(
            runner,
            ["--out", str(tmp_path), "analyze-tags", str(hbt_path), str(hom_path)],
        )
        report = json.loads((tmp_path / "tags_analysis.json").read_text())
        assert report["g2_zero"][0] < 0.05
        assert report["v_hom"][0] > 0.9
        assert report["indistinguishability"][0] > 0.93

    def test_wrong_kind_rejected(self, runner, tmp_path):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            hom = simulate_stream(SourceParams(), 50_000, seed=2, kind="hom")
        path = tmp_path / "only.hom.ptag"
        hom.to_binary(path)
        result = runner.invoke(main, ["--out", str(tmp_path), "analyze-tags", str(path)])
        assert result.exit_code == 4


class TestBudgetCommand:
    def test_reference_budget_report(self, runner, tmp_path):
        budget_path = tmp_path / "budget.txt"
        write_budget_file(EfficiencyBudget.reference_values(), budget_path)
        result = run_ok(
            runner,
            ["--out", str(tmp_path), "budget", str(budget_path),
             "--simulated-coupling", "0.71"],
        )
        report = json.loads((tmp_path / "budget_report.json").read_text())
        assert report["pillar_to_fiber"][0] == pytest.approx(0.75, abs=0.01)
        assert report["verdict"] == "consistent"
        assert "0.75" in result.output or "0.748" in result.output

    def test_missing_budget_file(self, runner, tmp_path):
        result = runner.invoke(main, ["--out", str(tmp_path), "budget", "none.txt"])
        assert result.exit_code == 3


class TestPhotonRun:
    def test_metrics_and_histograms(self, runner, tmp_path):
        run_ok(
            runner,
            ["--seed", "5", "--out", str(tmp_path), "photon-run",
             "--pulses", "400000"],
        )
        report = json.loads((tmp_path / "photon_metrics.json").read_text())
        assert report["g2_zero"][0] == pytest.approx(0.013, abs=0.01)
        assert report["v_hom"][0] == pytest.approx(0.95, abs=0.02)
        assert (tmp_path / "hbt_histogram.csv").exists()
        assert (tmp_path / "hom_histogram.csv").exists()

    def test_byte_identical_reruns(self, runner, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            run_ok(
                runner,
                ["--seed", "3", "--out", str(out), "photon-run",
                 "--pulses", "200000"],
            )
        assert (out_a / "photon_metrics.json").read_bytes() == (
            out_b / "photon_metrics.json"
        ).read_bytes()
        assert (out_a / "hbt_histogram.csv").read_bytes() == (
            out_b / "hbt_histogram.csv"
        ).read_bytes()


class TestStabilityRun:
    def test_report_recovers_generator_stds(self, runner, tmp_path):
        run_ok(runner, ["--seed", "2", "--out", str(tmp_path), "stability-run"])
        report = json.loads((tmp_path / "stability_report.json").read_text())
        assert report["rate"]["relative_std"] == pytest.approx(0.0282, abs=0.003)
        assert report["indistinguishability"]["relative_std"] == pytest.approx(
            0.0069, abs=0.003
        )
        lines = (tmp_path / "stability_series.csv").read_text().strip().split("\n")
        assert lines[0] == "time_s,rate_hz,indistinguishability"
        assert len(lines) == report["n_samples"] + 1


class TestConfigFile:
    def test_config_overrides_rig_defaults(self, runner, tmp_path):
        cfg = tmp_path / "rig.cfg"
        cfg.write_text(
            "# quiet rig\n"
            "spectrum_noise_rel = 0\n"
            "initial_misalignment_um = 0\n"
            "securing_sigma_um = 0\n"
            "stage_step_noise_um = 0\n"
        )
        run_ok(
            runner,
            ["--seed", "1", "--config", str(cfg), "--out", str(tmp_path),
             "align-demo"],
        )
        report = json.loads((tmp_path / "alignment_report.json").read_text())
        assert report["residual_offset_um"] < 0.01

    def test_bad_config_exit_code(self, runner, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("spectrum_noise_rel -1\n")
        result = runner.invoke(
            main, ["--config", str(cfg), "--out", str(tmp_path), "align-demo"]
        )
        assert result.exit_code == 4

    def test_usage_error_exit_code(self, runner):
        result = runner.invoke(main, ["no-such-command"])
        assert result.exit_code == 2
