import numpy as np
import pytest

from pigtailsim.errors import (
    InsufficientScanError,
    NoInteriorMaximumError,
    OutOfBandError,
    TooFewFringesError,
)
from pigtailsim.modes import DeviceSpec, FiberSpec, PillarSpec
from pigtailsim.spectra import (
    CONTACT_NORMALIZED,
    ContrastProfile,
    FringePair,
    Spectrum,
    contrast_profile,
    estimate_center,
    estimate_gap,
    find_mode_dips,
    mode_dip_contrasts,
    synth_reflectivity,
    thermal_shifted_wavelength,
)

DEVICE = DeviceSpec(pillar=PillarSpec(), fiber=FiberSpec())


def scan_profile(true_center, offsets, gap=3.0, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    scan = [
        (
            x,
            synth_reflectivity(
                DEVICE, gap, offset_um=x - true_center, noise_rel=noise, rng=rng
            ),
        )
        for x in offsets
    ]
    return contrast_profile(scan, DEVICE.pillar)


class TestFringePair:
    def test_worked_fringe_example_is_exact(self):
        # maxima at 875 and 1000 nm: gap = 875*1000 / (2*125) nm = 3.5 um
        assert FringePair(875.0, 1000.0).gap_um == 3.5

    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            FringePair(1000.0, 875.0)


class TestSynth:
    def test_fringe_maxima_at_resonant_orders(self):
        s = synth_reflectivity(DEVICE, 3.5)
        lam, r = s.wavelengths_nm, s.reflectivity
        # 2*gap = m*lambda puts maxima at 875 (m=8) and 1000 (m=7)
        i875 = int(np.argmin(np.abs(lam - 875.0)))
        assert r[i875] >= r[i875 - 25] and r[i875] >= r[i875 + 25]
        # the m=7 maximum sits exactly at the band edge
        assert r[-1] == pytest.approx(r[i875], rel=1e-6)
        assert np.all(np.diff(r[-200:]) > 0)

    def test_deepest_dip_at_fundamental_when_centered(self):
        s = synth_reflectivity(DEVICE, 3.0, offset_um=0.0)
        baseline_ratio = s.reflectivity / np.maximum(
            np.interp(
                s.wavelengths_nm,
                s.wavelengths_nm,
                synth_reflectivity(DEVICE, 3.0, peak_contrasts=(0, 0)).reflectivity,
            ),
            1e-12,
        )
        deepest = s.wavelengths_nm[int(np.argmin(baseline_ratio))]
        assert deepest == pytest.approx(945.8, abs=0.05)

    def test_second_mode_dark_on_axis(self):
        contrasts = mode_dip_contrasts(DEVICE, 3.0, 0.0)
        assert contrasts[1] == 0.0
        off = mode_dip_contrasts(DEVICE, 3.0, 0.8)
        assert off[1] > 0.05

    def test_band_validation(self):
        with pytest.raises(OutOfBandError):
            synth_reflectivity(DEVICE, 3.0, band_nm=(800.0, 1000.0))
        with pytest.raises(ValueError):
            synth_reflectivity(DEVICE, 0.0)

    def test_noise_reproducible_from_seed(self):
        a = synth_reflectivity(DEVICE, 3.0, noise_rel=0.005, rng=42)
        b = synth_reflectivity(DEVICE, 3.0, noise_rel=0.005, rng=42)
        assert np.array_equal(a.reflectivity, b.reflectivity)

    def test_csv_round_trip(self, tmp_path):
        s = synth_reflectivity(DEVICE, 3.0, noise_rel=0.002, rng=1)
        path = tmp_path / "spec.csv"
        s.to_csv(path)
        back = Spectrum.from_csv(path)
        np.testing.assert_allclose(back.reflectivity, s.reflectivity, rtol=1e-8)

    def test_thermal_blue_shift_monotone(self):
        temps = [300.0, 200.0, 100.0, 2.4]
        lams = [thermal_shifted_wavelength(945.8, t) for t in temps]
        assert all(a > b for a, b in zip(lams, lams[1:]))


class TestEstimateGap:
    @pytest.mark.parametrize("gap", [1.0, 2.2, 3.5, 4.7, 5.3, 6.9, 8.6, 10.0])
    def test_noiseless_round_trip(self, gap):
        s = synth_reflectivity(DEVICE, gap)
        est = estimate_gap(s)
        assert est.gap_um == pytest.approx(gap, abs=0.05)

    def test_noisy_round_trip_at_landing_gap(self):
        s = synth_reflectivity(DEVICE, 3.5, noise_rel=0.005, rng=3)
        est = estimate_gap(s)
        assert est.gap_um == pytest.approx(3.5, abs=0.05)

    def test_pair_path_used_when_fringes_abound(self):
        est = estimate_gap(synth_reflectivity(DEVICE, 8.6))
        assert est.method == "fringe-pairs"
        assert est.n_maxima >= 2
        assert all(p.delta_nm > 0 for p in est.pairs)

    def test_fit_path_used_for_sparse_fringes(self):
        est = estimate_gap(synth_reflectivity(DEVICE, 1.0))
        assert est.method == "fringe-fit"

    def test_large_gap_over_narrow_band(self):
        # 30 nm band at 89 um: ~5 nm fringe spacing, plenty of maxima
        s = synth_reflectivity(DEVICE, 89.0, band_nm=(940.0, 970.0))
        est = estimate_gap(s)
        assert est.gap_um == pytest.approx(89.0, abs=2.0)

    def test_too_few_fringes_for_tiny_gap(self):
        with pytest.raises(TooFewFringesError):
            estimate_gap(synth_reflectivity(DEVICE, 0.05))

    def test_relative_uncertainty_shrinks_with_gap(self):
        gaps = [5.2, 6.9, 9.4]
        rels = []
        for g in gaps:
            est = estimate_gap(synth_reflectivity(DEVICE, g))
            assert est.method == "fringe-pairs"
            rels.append(est.sigma_um / est.gap_um)
        assert rels[0] < rels[1] < rels[2]


class TestFindModeDips:
    def test_centered_contrast_matches_configuration(self):
        # at vanishing gap and zero offset the fundamental dip contrast
        # is the configured peak contrast
        s = synth_reflectivity(DEVICE, 0.05)
        dips = find_mode_dips(s, DEVICE.pillar)
        assert dips[0].found
        assert dips[0].contrast == pytest.approx(0.90, rel=0.01)
        assert dips[0].center_wavelength_nm == pytest.approx(945.8, abs=0.01)

    def test_linewidth_consistent_with_quality_factor(self):
        s = synth_reflectivity(DEVICE, 0.05)
        dips = find_mode_dips(s, DEVICE.pillar)
        expected = 945.8 / DEVICE.pillar.quality_factor
        assert expected / 2 <= dips[0].linewidth_nm <= expected * 2

    def test_contrast_drops_with_offset(self):
        centered = find_mode_dips(synth_reflectivity(DEVICE, 3.0, 0.0), DEVICE.pillar)
        shifted = find_mode_dips(synth_reflectivity(DEVICE, 3.0, 1.4), DEVICE.pillar)
        assert shifted[0].contrast < centered[0].contrast

    def test_pure_background_flags_all_modes_absent(self):
        s = synth_reflectivity(DEVICE, 3.0, peak_contrasts=(0.0, 0.0))
        dips = find_mode_dips(s, DEVICE.pillar)
        assert all(not d.found for d in dips)
        assert all(d.contrast == 0.0 for d in dips)

    def test_cold_spectrum_needs_shifted_expectations(self):
        cold = synth_reflectivity(DEVICE, 3.5, temperature_k=2.4)
        shifted = [
            thermal_shifted_wavelength(w, 2.4)
            for w in DEVICE.pillar.mode_wavelengths_nm
        ]
        dips = find_mode_dips(cold, DEVICE.pillar, expected_wavelengths_nm=shifted)
        assert dips[0].found
        assert dips[0].center_wavelength_nm == pytest.approx(shifted[0], abs=0.01)
        # room-temperature expectations miss the shifted dips
        stale = find_mode_dips(cold, DEVICE.pillar)
        assert not stale[0].found


class TestContrastProfileAndCenter:
    def test_profile_symmetric_for_fundamental(self):
        offsets = np.linspace(-2.0, 2.0, 17)
        prof = scan_profile(0.0, offsets)
        c0 = prof.contrast_per_mode[0]
        np.testing.assert_allclose(c0, c0[::-1], atol=1e-3)

    def test_antisymmetric_mode_dips_at_center(self):
        offsets = np.linspace(-2.0, 2.0, 17)
        prof = scan_profile(0.0, offsets)
        c1 = prof.contrast_per_mode[1]
        mid = len(offsets) // 2
        assert c1[mid] < 0.02
        assert c1.max() > 0.1

    def test_center_estimate_noiseless(self):
        offsets = np.linspace(-2.0, 2.0, 17)
        est = estimate_center(scan_profile(0.0, offsets))
        assert abs(est.offset_um) < 1e-3

    def test_center_estimate_with_noise_within_200nm(self):
        offsets = np.arange(-2.0, 2.01, 0.25)
        est = estimate_center(scan_profile(0.35, offsets, noise=0.01, seed=11))
        assert est.offset_um == pytest.approx(0.35, abs=0.2)
        assert est.sigma_um <= 0.2

    def test_translation_equivariance(self):
        offsets = np.linspace(-2.0, 2.0, 17)
        prof = scan_profile(0.0, offsets)
        base = estimate_center(prof)
        moved = estimate_center(prof.shifted(0.8))
        assert moved.offset_um == pytest.approx(base.offset_um + 0.8, abs=1e-9)

    def test_scan_missing_pillar_raises(self):
        # window entirely to one side of a pillar at zero: monotone
        # profile with no interior maximum
        offsets = np.linspace(1.0, 3.0, 9)
        contrasts = np.array(
            [mode_dip_contrasts(DEVICE, 3.0, x) for x in offsets]
        ).T
        prof = ContrastProfile(offsets, contrasts)
        with pytest.raises(NoInteriorMaximumError):
            estimate_center(prof)

    def test_scan_preconditions(self):
        spectra = [
            (x, synth_reflectivity(DEVICE, 3.0, offset_um=x))
            for x in (0.5, 1.0, 1.5, 2.0, 2.5)
        ]
        with pytest.raises(InsufficientScanError):
            contrast_profile(spectra, DEVICE.pillar)
        with pytest.raises(InsufficientScanError):
            contrast_profile(spectra[:3], DEVICE.pillar)
