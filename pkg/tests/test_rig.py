import dataclasses

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from pigtailsim.errors import (
    InvalidConfigError,
    MotionForbiddenError,
    PhaseError,
)
from pigtailsim.modes import DeviceSpec
from pigtailsim.rig import (
    COLD,
    FREE,
    LANDED,
    SECURED,
    AlignmentReport,
    RigConfig,
    acquire_spectrum,
    auto_align,
    move_stage,
    new_session,
    run_cooldown,
    secure,
    thermal_cycle,
    vertical_landing,
    warmup,
    write_event_log,
)
from pigtailsim.spectra import estimate_gap, find_mode_dips

DEV = DeviceSpec()


def quiet_config(**kw):
    defaults = dict(
        spectrum_noise_rel=0.0,
        stage_step_noise_um=0.0,
        securing_sigma_um=0.0,
        initial_misalignment_um=0.0,
        cycle_jitter_nm=0.0,
    )
    defaults.update(kw)
    return RigConfig(**defaults)


def landed_session(seed=1, config=None, center=None):
    s = new_session(DEV, config or RigConfig(), seed)
    if center is not None:
        s = dataclasses.replace(s, true_pillar_center_um=center)
    return move_stage(s, 0.0, 0.0, -s.stage_position_um[2] - 1.0)


class TestNewSession:
    def test_seed_reproducibility(self):
        a = new_session(DEV, RigConfig(), 42)
        b = new_session(DEV, RigConfig(), 42)
        assert a.true_pillar_center_um == b.true_pillar_center_um
        assert a.event_log == b.event_log

    def test_zero_misalignment_radius(self):
        s = new_session(DEV, RigConfig(initial_misalignment_um=0.0), 3)
        assert s.true_pillar_center_um == (0.0, 0.0)

    def test_default_center_within_radius(self):
        for seed in range(10):
            s = new_session(DEV, RigConfig(), seed)
            assert np.hypot(*s.true_pillar_center_um) <= 5.0

    def test_config_validation(self):
        with pytest.raises(InvalidConfigError):
            RigConfig(spectrum_noise_rel=-0.1)
        with pytest.raises(InvalidConfigError):
            RigConfig(base_temperature_k=1.0)


class TestMoveStage:
    def test_lowering_past_contact_lands_at_design_gap(self):
        s = new_session(DEV, RigConfig(), 1)
        s = move_stage(s, 0.0, 0.0, -1000.0)
        assert s.phase == LANDED
        assert s.gap_um == s.config.stamp_design_gap_um == 3.0
        assert s.ferrule_locked

    def test_zero_move_changes_only_log(self):
        s = new_session(DEV, RigConfig(), 1)
        moved = move_stage(s, 0.0, 0.0, 0.0)
        assert moved.stage_position_um == s.stage_position_um
        assert moved.fiber_position_um == s.fiber_position_um
        assert len(moved.event_log) == len(s.event_log) + 1

    def test_lateral_move_forbidden_after_secure(self):
        s = landed_session()
        s = secure(s)
        with pytest.raises(MotionForbiddenError):
            move_stage(s, 0.1, 0.0, 0.0)

    def test_z_motion_forbidden_once_landed(self):
        s = landed_session()
        with pytest.raises(MotionForbiddenError):
            move_stage(s, 0.0, 0.0, 0.5)
        # lateral motion stays allowed while landed
        assert move_stage(s, 0.2, 0.0, 0.0).phase == LANDED

    def test_step_noise_applied_per_commanded_axis(self):
        cfg = RigConfig(stage_step_noise_um=0.01)
        s = new_session(DEV, cfg, 5)
        moved = move_stage(s, 1.0, 0.0, 0.0)
        # commanded position is exact, true fiber position carries noise
        assert moved.stage_position_um[0] == 1.0
        assert moved.fiber_position_um[0] != 1.0
        assert moved.fiber_position_um[1] == 0.0


class TestAcquireSpectrum:
    def test_sequential_acquisitions_differ_only_by_noise(self):
        s = landed_session(config=RigConfig(spectrum_noise_rel=0.005))
        s, a = acquire_spectrum(s)
        s, b = acquire_spectrum(s)
        assert np.array_equal(a.wavelengths_nm, b.wavelengths_nm)
        assert not np.array_equal(a.reflectivity, b.reflectivity)
        assert np.abs(a.reflectivity - b.reflectivity).max() < 0.1

    def test_replay_from_same_state_is_identical(self):
        s = landed_session(config=RigConfig(spectrum_noise_rel=0.005))
        _, a = acquire_spectrum(s)
        _, b = acquire_spectrum(s)
        assert np.array_equal(a.reflectivity, b.reflectivity)

    def test_landed_fringes_encode_design_gap(self):
        s = landed_session(config=quiet_config())
        _, spectrum = acquire_spectrum(s)
        assert estimate_gap(spectrum).gap_um == pytest.approx(3.0, abs=0.3)

    def test_cold_dips_blue_shifted(self):
        s = landed_session(config=quiet_config())
        s = secure(s)
        s, series = run_cooldown(s, n_steps=5)
        _, cold_spec = acquire_spectrum(s)
        dips = find_mode_dips(
            cold_spec, DEV.pillar, s.expected_mode_wavelengths_nm()
        )
        assert dips[0].found
        assert dips[0].center_wavelength_nm < 945.8 - 3.0


class TestVerticalLanding:
    def test_lands_at_design_gap_with_estimate(self):
        cfg = RigConfig()
        s = new_session(DEV, cfg, 11)
        s = vertical_landing(s)
        assert s.phase == LANDED
        assert s.gap_um == cfg.stamp_design_gap_um
        landed_events = [e for e in s.event_log if e.kind == "landed"]
        assert len(landed_events) == 1
        assert landed_events[0].payload["estimated_gap_um"] == pytest.approx(3.0, abs=0.3)

    def test_landing_twice_is_a_phase_error(self):
        s = vertical_landing(new_session(DEV, RigConfig(), 2))
        with pytest.raises(PhaseError):
            vertical_landing(s)


class TestAutoAlign:
    def test_offset_pillar_with_default_noise(self):
        s = landed_session(seed=9, center=(3.1, -2.4))
        s, report = auto_align(s)
        assert report.success
        assert report.residual_offset_um < 0.2
        assert s.true_offset_um == report.residual_offset_um

    def test_noiseless_centered_first_iteration(self):
        s = landed_session(config=quiet_config(), center=(0.0, 0.0))
        s, report = auto_align(s)
        assert report.success
        assert report.residual_offset_um < 0.01
        assert report.iterations == 1

    def test_pillar_outside_search_radius_fails_cleanly(self):
        s = landed_session(seed=4, center=(12.0, 0.0))
        s, report = auto_align(s)
        assert not report.success

    def test_report_serializes(self):
        s = landed_session(config=quiet_config())
        _, report = auto_align(s)
        assert isinstance(report, AlignmentReport)
        assert "residual_offset_um" in report.as_json()


class TestSecure:
    def test_zero_sigma_keeps_offset(self):
        s = landed_session(config=quiet_config(), center=(0.2, 0.1))
        before = s.true_offset_um
        s = secure(s)
        assert s.phase == SECURED
        assert s.true_offset_um == before

    def test_contrast_survives_securing(self):
        cfg = RigConfig(spectrum_noise_rel=0.003)
        s = landed_session(seed=21, config=cfg, center=(0.0, 0.0))
        _, spec_before = acquire_spectrum(s)
        c_before = find_mode_dips(spec_before, DEV.pillar)[0].contrast
        s = secure(s)
        _, spec_after = acquire_spectrum(s)
        c_after = find_mode_dips(spec_after, DEV.pillar)[0].contrast
        assert c_after == pytest.approx(c_before, abs=0.05)

    def test_requires_landed(self):
        s = new_session(DEV, RigConfig(), 1)
        with pytest.raises(PhaseError):
            secure(s)


class TestCooldown:
    def make_secured(self, **cfg_kw):
        s = landed_session(config=quiet_config(**cfg_kw), center=(0.0, 0.0))
        return secure(s)

    def test_cooldown_series_and_final_gap(self):
        s = self.make_secured()
        s, series = run_cooldown(s)
        assert s.phase == COLD
        assert s.temperature_k == 2.4
        temps = [t for t, _ in series]
        assert all(a > b for a, b in zip(temps, temps[1:]))
        est = estimate_gap(series[-1][1])
        assert est.gap_um == pytest.approx(3.5, abs=0.2)

    def test_fundamental_remains_deepest_every_step(self):
        s = self.make_secured()
        state = s
        state, series = run_cooldown(state, n_steps=8)
        for temp, spectrum in series:
            expected = [
                w
                for w in (
                    dataclasses.replace(state, temperature_k=temp)
                    .expected_mode_wavelengths_nm()
                )
            ]
            dips = find_mode_dips(spectrum, DEV.pillar, expected)
            assert dips[0].found
            assert dips[0].contrast > dips[1].contrast

    def test_lateral_offset_conserved(self):
        s = landed_session(config=quiet_config(), center=(0.3, -0.2))
        s = secure(s)
        before = s.true_offset_um
        s, _ = run_cooldown(s)
        assert s.true_offset_um == before

    def test_requires_secured(self):
        s = landed_session()
        with pytest.raises(PhaseError):
            run_cooldown(s)


class TestThermalCycle:
    def make_secured(self, seed=31, **cfg_kw):
        config = RigConfig(
            spectrum_noise_rel=0.003,
            stage_step_noise_um=0.0,
            securing_sigma_um=0.0,
            initial_misalignment_um=0.0,
            **cfg_kw,
        )
        return secure(landed_session(seed=seed, config=config))

    def test_nine_cycles_stable(self):
        s = self.make_secured()
        s, report = thermal_cycle(s, 9)
        assert report.n_cycles == 9
        assert report.std_defined
        assert report.fundamental_wavelength_std_nm < 0.030
        for contrasts in report.mode_contrasts:
            assert contrasts[1] < contrasts[0]

    def test_single_cycle_flags_undefined_std(self):
        s = self.make_secured()
        s, report = thermal_cycle(s, 1)
        assert report.fundamental_wavelength_std_nm == 0.0
        assert not report.std_defined

    def test_requires_secured_or_cold(self):
        s = landed_session()
        with pytest.raises(PhaseError):
            thermal_cycle(s, 2)


class TestDeterminismAndLog:
    def run_script(self, seed):
        cfg = RigConfig()
        s = new_session(DEV, cfg, seed)
        s = move_stage(s, 0.5, -0.25, 0.0)
        s = move_stage(s, 0.0, 0.0, -500.0)
        s, _ = acquire_spectrum(s)
        s = secure(s)
        s, _ = run_cooldown(s, n_steps=4)
        s = warmup(s)
        return s

    def test_identical_seed_and_ops_identical_state(self):
        a = self.run_script(17)
        b = self.run_script(17)
        assert a.event_log == b.event_log
        assert a.fiber_position_um == b.fiber_position_um
        assert a.phase == b.phase

    def test_event_log_totally_ordered(self):
        s = self.run_script(5)
        seqs = [e.seq for e in s.event_log]
        assert seqs == sorted(seqs)
        assert len(set(seqs)) == len(seqs)
        times = [e.time_s for e in s.event_log]
        assert all(a <= b for a, b in zip(times, times[1:]))

    def test_event_log_export(self, tmp_path):
        import json

        s = self.run_script(5)
        path = tmp_path / "events.ndjson"
        write_event_log(s, path)
        lines = path.read_text().strip().split("\n")
        assert len(lines) == len(s.event_log)
        first = json.loads(lines[0])
        assert first["event"] == "session-created"


PHASE_GRAPH = {
    FREE: {FREE, LANDED},
    LANDED: {LANDED, SECURED},
    SECURED: {SECURED, COLD},
    COLD: {COLD, SECURED},
}


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(
    seed=st.integers(min_value=0, max_value=2**31 - 1),
    ops=st.lists(
        st.sampled_from(["move", "drop", "acquire", "secure", "cooldown", "warmup"]),
        min_size=1,
        max_size=8,
    ),
)
def test_phase_machine_never_makes_illegal_transitions(seed, ops):
    cfg = RigConfig(spectrum_noise_rel=0.0)
    state = new_session(DEV, cfg, seed)
    for op in ops:
        phase_before = state.phase
        try:
            if op == "move":
                state = move_stage(state, 0.3, -0.1, 0.0)
            elif op == "drop":
                state = move_stage(state, 0.0, 0.0, -1e4)
            elif op == "acquire":
                state, _ = acquire_spectrum(state)
            elif op == "secure":
                state = secure(state)
            elif op == "cooldown":
                state, _ = run_cooldown(state, n_steps=2)
            elif op == "warmup":
                state = warmup(state)
        except (PhaseError, MotionForbiddenError):
            assert state.phase == phase_before
            continue
        assert state.phase in PHASE_GRAPH[phase_before]
