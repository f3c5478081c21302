"""Reflectivity spectra of the fiber-above-chip system and the
estimators used during alignment.

Synthesis: a two-beam interference background between the fiber facet
and the chip surface (fringe maxima where 2 * gap = m * lambda), with
one Lorentzian dip per pillar transverse mode.  Dip contrast follows a
Gaussian-equivalent coupling model in (offset, gap); the peak contrasts
per mode are calibration constants, not first-principles quantities.

Estimation: the gap comes from the fringe-spacing relation
gap = lambda1 * lambda2 / (2 * delta_lambda) averaged over successive
maxima pairs; when the band holds fewer than two maxima (small gaps) a
least-squares fit of the interference phase takes over.  Mode dips are
located and quantified by Lorentzian fits against a median-filtered
baseline, and the lateral center is recovered from an even-polynomial
fit of the fundamental-mode contrast profile, cross-checked against the
antisymmetric-mode minimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import median_filter
from scipy.optimize import curve_fit
from scipy.signal import find_peaks

from .errors import (
    InsufficientScanError,
    NoInteriorMaximumError,
    OutOfBandError,
    TooFewFringesError,
)
from .modes import DeviceSpec, PillarSpec, pillar_gaussian_waist

SPECTRUM_CSV_HEADER = "wavelength_nm,reflectivity"

# Full wavelength window of the broadband source / models [nm].
DEFAULT_BAND_NM = (850.0, 1000.0)
DEFAULT_RESOLUTION_NM = 0.02

# Background interference amplitudes (normalized units; only fringe
# positions and dip contrasts carry information used by the procedure).
FIBER_FACET_REFLECTANCE = 0.035
CHIP_EFFECTIVE_REFLECTANCE = 0.30

# Peak dip contrast per transverse mode at perfect alignment and zero
# gap; calibration constants.
DEFAULT_PEAK_CONTRASTS = (0.90, 0.60)

# Mode wavelength vs temperature: lambda(T) = lambda(300 K) - s * (1 -
# exp(-(300 - T)/T0)).  Monotone blue shift that flattens at low T.
THERMAL_SHIFT_SCALE_NM = 5.0
THERMAL_SHIFT_KNEE_K = 120.0

CONTACT_NORMALIZED = "contact-normalized"
RAW = "raw"


@dataclass
class Spectrum:
    """Reflectivity vs wavelength, in normalized or raw units."""

    wavelengths_nm: np.ndarray
    reflectivity: np.ndarray
    normalization: str = CONTACT_NORMALIZED

    def __post_init__(self):
        self.wavelengths_nm = np.asarray(self.wavelengths_nm, dtype=float)
        self.reflectivity = np.asarray(self.reflectivity, dtype=float)
        if self.wavelengths_nm.shape != self.reflectivity.shape:
            raise ValueError("wavelength and reflectivity arrays differ in length")
        if self.wavelengths_nm.ndim != 1 or len(self.wavelengths_nm) < 2:
            raise ValueError("spectrum needs at least two samples")
        if not np.all(np.diff(self.wavelengths_nm) > 0):
            raise ValueError("wavelengths must be strictly increasing")
        if np.any(self.reflectivity < 0):
            raise ValueError("reflectivity must be >= 0")
        if self.normalization not in (CONTACT_NORMALIZED, RAW):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @property
    def resolution_nm(self) -> float:
        return float(np.median(np.diff(self.wavelengths_nm)))

    def to_csv(self, path) -> None:
        """Write "wavelength_nm,reflectivity" CSV, one point per line."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(SPECTRUM_CSV_HEADER + "\n")
            for w, r in zip(self.wavelengths_nm, self.reflectivity):
                fh.write(f"{w:.9g},{r:.9g}\n")

    @classmethod
    def from_csv(cls, path, normalization: str = CONTACT_NORMALIZED) -> "Spectrum":
        wl, rf = [], []
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != SPECTRUM_CSV_HEADER:
                raise ValueError(f"unexpected spectrum CSV header {header!r}")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                w, r = line.split(",")
                wl.append(float(w))
                rf.append(float(r))
        return cls(np.array(wl), np.array(rf), normalization)


@dataclass(frozen=True)
class FringePair:
    """Two successive reflectivity maxima and their spacing [nm]."""

    lambda1_nm: float
    lambda2_nm: float

    def __post_init__(self):
        if self.lambda2_nm <= self.lambda1_nm:
            raise ValueError("lambda2 must exceed lambda1")

    @property
    def delta_nm(self) -> float:
        return self.lambda2_nm - self.lambda1_nm

    @property
    def gap_um(self) -> float:
        """Gap from the fringe relation lambda1*lambda2 / (2 delta) [um]."""
        return self.lambda1_nm * self.lambda2_nm / (2.0 * self.delta_nm) * 1e-3


@dataclass(frozen=True)
class DipFeature:
    """One cavity-mode dip in a reflectivity spectrum."""

    center_wavelength_nm: float
    contrast: float
    linewidth_nm: float
    mode_order: int
    found: bool = True


@dataclass
class ContrastProfile:
    """Per-mode dip contrast versus lateral offset."""

    offsets_um: np.ndarray
    contrast_per_mode: np.ndarray  # shape (n_modes, n_offsets)

    def __post_init__(self):
        self.offsets_um = np.asarray(self.offsets_um, dtype=float)
        self.contrast_per_mode = np.atleast_2d(
            np.asarray(self.contrast_per_mode, dtype=float)
        )
        if self.contrast_per_mode.shape[1] != len(self.offsets_um):
            raise ValueError("contrast rows must match the offsets axis")

    def shifted(self, delta_um: float) -> "ContrastProfile":
        return ContrastProfile(self.offsets_um + delta_um, self.contrast_per_mode)


@dataclass(frozen=True)
class GapEstimate:
    gap_um: float
    sigma_um: float
    n_maxima: int
    method: str  # "fringe-pairs" or "fringe-fit"
    pairs: tuple = ()


@dataclass(frozen=True)
class CenterEstimate:
    offset_um: float
    sigma_um: float
    cross_check_offset_um: float | None = None


def thermal_shifted_wavelength(
    wavelength_300k_nm: float,
    temperature_k: float,
    scale_nm: float = THERMAL_SHIFT_SCALE_NM,
    knee_k: float = THERMAL_SHIFT_KNEE_K,
) -> float:
    """Mode wavelength at temperature T; blue-shifts on cooling."""
    return wavelength_300k_nm - scale_nm * (
        1.0 - np.exp(-(300.0 - temperature_k) / knee_k)
    )


def gaussian_equivalent_coupling(
    w_pillar_um: float,
    w_fiber_um: float,
    gap_um: float,
    offset_um: float,
    wavelength_nm: float,
) -> tuple[float, float]:
    """On-axis coupling and offset scale of two Gaussian-equivalent modes.

    Returns (eta_axial, s2) where eta_axial is the standard coupling of
    two waists separated by the gap and s2 = w_pillar^2 + w_fiber(z)^2
    is the squared lateral decay scale; the fundamental-mode factor is
    eta_axial * exp(-2 offset^2 / s2).
    """
    lam_um = wavelength_nm * 1e-3
    ratio = w_pillar_um / w_fiber_um + w_fiber_um / w_pillar_um
    beta = lam_um * gap_um / (np.pi * w_pillar_um * w_fiber_um)
    eta_axial = 4.0 / (ratio**2 + beta**2)
    zr = np.pi * w_fiber_um**2 / lam_um
    w_z = w_fiber_um * np.sqrt(1.0 + (gap_um / zr) ** 2)
    return eta_axial, w_pillar_um**2 + w_z**2


def mode_dip_contrasts(
    device: DeviceSpec,
    gap_um: float,
    offset_um: float,
    peak_contrasts=DEFAULT_PEAK_CONTRASTS,
) -> list[float]:
    """Dip contrast of each transverse mode at the given misalignment.

    Weights are normalized to the centered-at-contact reference, so the
    configured peak contrast is exactly the fundamental's contrast at
    zero offset and vanishing gap.  The fundamental follows the
    symmetric Gaussian-overlap factor; the antisymmetric mode vanishes
    on axis and peaks at offset^2 = s2/2.
    """
    pillar = device.pillar
    w_p = pillar_gaussian_waist(pillar)
    out = []
    for order in range(pillar.n_transverse_modes):
        lam = pillar.mode_wavelengths_nm[order]
        w_f = device.fiber.marcuse_waist(lam)
        eta_ax, s2 = gaussian_equivalent_coupling(w_p, w_f, gap_um, offset_um, lam)
        eta_ref, _ = gaussian_equivalent_coupling(w_p, w_f, 0.0, 0.0, lam)
        c_max = peak_contrasts[order] if order < len(peak_contrasts) else 0.3
        d2 = offset_um**2
        if pillar.mode_parities[order] == "symmetric":
            weight = np.exp(-2.0 * d2 / s2)
        else:
            weight = (2.0 * d2 / s2) * np.exp(1.0 - 2.0 * d2 / s2)
        out.append(float(np.clip(c_max * (eta_ax / eta_ref) * weight, 0.0, 1.0)))
    return out


def synth_reflectivity(
    device: DeviceSpec,
    gap_um: float,
    offset_um: float = 0.0,
    temperature_k: float = 300.0,
    band_nm: tuple[float, float] = DEFAULT_BAND_NM,
    resolution_nm: float = DEFAULT_RESOLUTION_NM,
    noise_rel: float = 0.0,
    rng: np.random.Generator | int | None = None,
    normalization: str = CONTACT_NORMALIZED,
    peak_contrasts=DEFAULT_PEAK_CONTRASTS,
    thermal_scale_nm: float = THERMAL_SHIFT_SCALE_NM,
    thermal_knee_k: float = THERMAL_SHIFT_KNEE_K,
    mode_wavelength_offset_nm: float = 0.0,
) -> Spectrum:
    """Synthesize the reflectivity spectrum of the fiber-above-chip system.

    Background: R(lambda) = Rf + Rc + 2 sqrt(Rf Rc) cos(4 pi gap/lambda),
    so maxima sit at 2 gap = m lambda.  Each pillar mode multiplies in a
    Lorentzian dip at its temperature-shifted wavelength with FWHM
    lambda/Q and depth from mode_dip_contrasts.  Multiplicative Gaussian
    noise of relative amplitude ``noise_rel`` is applied per sample.
    """
    if gap_um <= 0.0:
        raise ValueError("gap must be > 0 for a spectrum")
    lo, hi = band_nm
    if lo >= hi:
        raise OutOfBandError(f"empty band {band_nm}")
    if lo < DEFAULT_BAND_NM[0] - 1e-9 or hi > DEFAULT_BAND_NM[1] + 1e-9:
        raise OutOfBandError(
            f"band {band_nm} outside supported window {DEFAULT_BAND_NM}"
        )

    n = int(round((hi - lo) / resolution_nm)) + 1
    lam = lo + np.arange(n) * resolution_nm

    rf, rc = FIBER_FACET_REFLECTANCE, CHIP_EFFECTIVE_REFLECTANCE
    gap_nm = gap_um * 1e3
    background = rf + rc + 2.0 * np.sqrt(rf * rc) * np.cos(4.0 * np.pi * gap_nm / lam)

    refl = background.copy()
    contrasts = mode_dip_contrasts(device, gap_um, offset_um, peak_contrasts)
    for order, c in enumerate(contrasts):
        center = mode_wavelength_offset_nm + thermal_shifted_wavelength(
            device.pillar.mode_wavelengths_nm[order],
            temperature_k,
            thermal_scale_nm,
            thermal_knee_k,
        )
        gamma = device.pillar.linewidth_nm(order) / 2.0  # HWHM
        lorentz = gamma**2 / (gamma**2 + (lam - center) ** 2)
        refl *= 1.0 - c * lorentz

    if normalization == CONTACT_NORMALIZED:
        refl = refl / (rf + rc + 2.0 * np.sqrt(rf * rc))

    if noise_rel > 0.0:
        gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        refl = refl * (1.0 + noise_rel * gen.standard_normal(n))
        refl = np.maximum(refl, 0.0)

    return Spectrum(lam, refl, normalization)


def _dip_free_baseline(spectrum: Spectrum, window_nm: float = 0.5) -> np.ndarray:
    """Median-filtered reflectivity: removes narrow dips, keeps fringes."""
    size = max(3, int(round(window_nm / spectrum.resolution_nm)) | 1)
    return median_filter(spectrum.reflectivity, size=size, mode="nearest")


def _refine_peak(lam: np.ndarray, y: np.ndarray, i: int) -> float:
    """Parabolic interpolation of a local maximum around sample i."""
    if i <= 0 or i >= len(y) - 1:
        return float(lam[i])
    d1 = y[i + 1] - y[i - 1]
    d2 = y[i + 1] - 2.0 * y[i] + y[i - 1]
    if d2 >= 0.0:
        return float(lam[i])
    shift = -0.5 * d1 / d2
    return float(lam[i] + np.clip(shift, -1.0, 1.0) * (lam[min(i + 1, len(lam) - 1)] - lam[i]))


def _interference_phase_span(gap_um: float, band_nm: tuple[float, float]) -> float:
    lo, hi = band_nm
    return 4.0 * np.pi * gap_um * 1e3 * (1.0 / lo - 1.0 / hi)


# Minimum total interference phase across the band for the fit fallback
# to be well conditioned.
MIN_FIT_PHASE_RAD = 1.2


def _fit_gap_from_phase(spectrum: Spectrum, smooth: np.ndarray) -> GapEstimate:
    """Least-squares fit of a + b cos(4 pi g / lambda) for the gap.

    Used when the band holds fewer than two fringe maxima.  The fit is
    linear in (a, b) at fixed g, so the search is a 1D scan over g with
    quadratic refinement of the best residual.
    """
    lam = spectrum.wavelengths_nm
    band = (float(lam[0]), float(lam[-1]))
    y = smooth

    # Fewer than two interior maxima can occur up to roughly
    # lambda^2 / (2 * bandwidth) of fringe spacing spanning the band
    # twice over; pad that bound.  The smallest gap is set by the
    # usable interference phase span.
    g_hi = 1.2 * (band[1] ** 2 / (band[1] - band[0])) * 1e-3
    g_lo = MIN_FIT_PHASE_RAD / _interference_phase_span(1.0, band)
    if g_lo >= g_hi:
        raise TooFewFringesError("band too narrow to constrain the gap")

    phase_arg = 4.0 * np.pi * 1e3 / lam  # multiply by g [um] for phase

    def sse_of(g: float) -> tuple[float, float, float]:
        c = np.cos(phase_arg * g)
        cm = c - c.mean()
        denom = float(cm @ cm)
        if denom <= 0.0:
            return float(np.sum((y - y.mean()) ** 2)), float(y.mean()), 0.0
        b = float(cm @ (y - y.mean())) / denom
        a = float(y.mean() - b * c.mean())
        resid = y - a - b * c
        return float(resid @ resid), a, b

    gs = np.linspace(g_lo, g_hi, 1201)
    sses = np.array([sse_of(g)[0] for g in gs])
    i = int(np.argmin(sses))
    # quadratic refinement on the sse valley
    g_best = gs[i]
    if 0 < i < len(gs) - 1:
        d1 = sses[i + 1] - sses[i - 1]
        d2 = sses[i + 1] - 2.0 * sses[i] + sses[i - 1]
        if d2 > 0:
            g_best = float(gs[i] - 0.5 * d1 / d2 * (gs[1] - gs[0]))

    sse, a, b = sse_of(g_best)
    # Significance guards: the fitted modulation must be real fringe
    # structure, not a slow trend.  A usable fringe needs an extremum
    # inside (or just beyond) the band: the phase interval must reach
    # the next multiple of pi.
    phase_lo = 4.0 * np.pi * g_best * 1e3 / band[1]
    phase_hi = 4.0 * np.pi * g_best * 1e3 / band[0]
    # nearest fringe extremum at or beyond the low-phase band edge,
    # with a little slack so edge-aligned extrema still count
    next_extremum = np.ceil((phase_lo - 0.35) / np.pi) * np.pi
    if next_extremum > phase_hi + 0.35 or abs(b) < 0.02:
        raise TooFewFringesError(
            "band holds no usable fringe extremum; gap too small for this band"
        )
    n = len(y)
    noise_var = sse / max(n - 3, 1)
    # curvature of the sse valley gives the gap variance
    h = max((gs[1] - gs[0]) * 0.5, 1e-6)
    curv = (sse_of(g_best + h)[0] - 2.0 * sse + sse_of(g_best - h)[0]) / h**2
    sigma = float(np.sqrt(2.0 * noise_var / curv)) if curv > 0 else g_hi - g_lo
    sigma = max(sigma, 1e-6)
    return GapEstimate(float(g_best), sigma, n_maxima=int(0), method="fringe-fit")


def estimate_gap(spectrum: Spectrum) -> GapEstimate:
    """Gap between fiber facet and chip from the fringe pattern.

    Primary path: locate successive background maxima (mode dips are
    first removed by a median filter) and average
    lambda1 * lambda2 / (2 delta) over all successive pairs.  With fewer
    than two maxima in band the interference-phase fit takes over; when
    even that is unconstrained (gap far too small for the band) a
    TooFewFringesError signals "near contact" to the caller.
    """
    smooth = _dip_free_baseline(spectrum)
    lam = spectrum.wavelengths_nm

    amplitude = float(smooth.max() - smooth.min())
    if amplitude <= 0.0:
        raise TooFewFringesError("spectrum is flat; no interference structure")
    min_spacing = max(3, int(round(1.0 / spectrum.resolution_nm)))
    idx, _ = find_peaks(smooth, prominence=0.25 * amplitude, distance=min_spacing)

    if len(idx) < 2:
        return _fit_gap_from_phase(spectrum, smooth)

    positions = np.array([_refine_peak(lam, smooth, i) for i in idx])
    positions.sort()
    pairs = [
        FringePair(positions[i], positions[i + 1]) for i in range(len(positions) - 1)
    ]
    # a noise-split crest yields one absurd pair; drop pairs whose gap
    # strays far from the median before averaging
    gaps_all = np.array([p.gap_um for p in pairs])
    med = float(np.median(gaps_all))
    keep = (gaps_all > 0.5 * med) & (gaps_all < 2.0 * med)
    pairs = tuple(p for p, k in zip(pairs, keep) if k)
    gaps = gaps_all[keep]
    gap = float(gaps.mean())

    # pair-to-pair spread plus the wavelength-resolution floor; the
    # resolution term is treated as shared across pairs (sampling bias
    # does not average out), which keeps the reported relative
    # uncertainty growing monotonically with gap
    n = len(gaps)
    spread = float(gaps.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    res = spectrum.resolution_nm
    sigma_res = float(
        np.mean([np.sqrt(2.0) * res * p.gap_um / p.delta_nm for p in pairs])
    )
    sigma = float(np.hypot(spread, sigma_res))
    return GapEstimate(gap, max(sigma, 1e-9), n_maxima=len(idx), method="fringe-pairs", pairs=pairs)


def find_mode_dips(
    spectrum: Spectrum,
    expected: PillarSpec,
    expected_wavelengths_nm=None,
    match_window_nm: float = 0.5,
    fit_halfwidth_nm: float = 1.0,
) -> list[DipFeature]:
    """Locate and quantify the pillar-mode dips in a spectrum.

    Each expected mode must show a dip minimum within +-match_window_nm
    of its expected wavelength; the Lorentzian is then fitted over a
    wider +-fit_halfwidth_nm stretch against a median-filtered baseline
    whose window (2 nm) is broad enough not to swallow the Lorentzian
    wings.  A mode with no significant dip comes back with contrast 0
    and found=False rather than raising: absence is informative during
    alignment.
    """
    if expected_wavelengths_nm is None:
        expected_wavelengths_nm = expected.mode_wavelengths_nm
    lam = spectrum.wavelengths_nm
    baseline = _dip_free_baseline(spectrum, window_nm=2.0)

    features: list[DipFeature] = []
    for order, center0 in enumerate(expected_wavelengths_nm):
        gamma0 = expected.linewidth_nm(order) / 2.0
        sel = np.abs(lam - center0) <= fit_halfwidth_nm
        if not np.any(sel) or np.count_nonzero(sel) < 9:
            features.append(DipFeature(center0, 0.0, 0.0, order, found=False))
            continue
        x = lam[sel]
        with np.errstate(divide="ignore", invalid="ignore"):
            y = np.where(baseline[sel] > 0, spectrum.reflectivity[sel] / baseline[sel], 1.0)

        def dip(xx, contrast, center, gamma):
            return 1.0 - contrast * gamma**2 / (gamma**2 + (xx - center) ** 2)

        depth0 = max(1.0 - float(y.min()), 1e-3)
        c0 = float(x[int(np.argmin(y))])
        try:
            popt, _ = curve_fit(
                dip,
                x,
                y,
                p0=(depth0, c0, gamma0),
                bounds=(
                    [0.0, center0 - match_window_nm, gamma0 / 3.0],
                    [1.2, center0 + match_window_nm, gamma0 * 3.0],
                ),
                maxfev=2000,
            )
        except (RuntimeError, ValueError):
            features.append(DipFeature(center0, 0.0, 0.0, order, found=False))
            continue
        contrast, center, gamma = (float(v) for v in popt)
        # significance: depth must beat the local residual scatter
        resid = y - dip(x, *popt)
        noise = float(resid.std())
        if contrast < max(3.0 * noise, 1e-3):
            features.append(DipFeature(center0, 0.0, 0.0, order, found=False))
            continue
        features.append(
            DipFeature(center, min(contrast, 1.0), 2.0 * gamma, order, found=True)
        )
    return features


def contrast_profile(
    scan: list[tuple[float, Spectrum]],
    expected: PillarSpec,
    expected_wavelengths_nm=None,
) -> ContrastProfile:
    """Per-mode dip contrast versus lateral offset from a 1D scan."""
    if len(scan) < 5:
        raise InsufficientScanError("need at least 5 scan points")
    offsets = np.array([pt[0] for pt in scan], dtype=float)
    if offsets.min() >= 0.0 or offsets.max() <= 0.0:
        raise InsufficientScanError("scan must span both signs of offset")
    order_idx = np.argsort(offsets)
    offsets = offsets[order_idx]
    rows = np.zeros((expected.n_transverse_modes, len(offsets)))
    for col, i in enumerate(order_idx):
        dips = find_mode_dips(scan[i][1], expected, expected_wavelengths_nm)
        for order, dipf in enumerate(dips):
            rows[order, col] = dipf.contrast
    return ContrastProfile(offsets, rows)


def estimate_center(profile: ContrastProfile) -> CenterEstimate:
    """Lateral center from the fundamental-mode contrast profile.

    Fits an even polynomial (parabola) around the interior maximum of
    the fundamental contrast; the antisymmetric-mode minimum, when
    usable, provides a cross-check that widens the reported uncertainty
    when the two estimates disagree.
    """
    x = profile.offsets_um
    c0 = profile.contrast_per_mode[0]
    imax = int(np.argmax(c0))
    if imax == 0 or imax == len(x) - 1:
        raise NoInteriorMaximumError(
            "fundamental contrast peaks at the scan edge; widen or move the scan"
        )
    if c0[imax] <= 0.0:
        raise NoInteriorMaximumError("no contrast signal anywhere in the scan")

    # fit the parabola over the points that still carry signal
    sel = c0 >= 0.35 * c0[imax]
    # ensure at least 5 points around the maximum
    if np.count_nonzero(sel) < 5:
        lo = max(imax - 2, 0)
        hi = min(imax + 3, len(x))
        sel = np.zeros_like(sel)
        sel[lo:hi] = True
    xs, ys = x[sel], c0[sel]
    coeffs, cov = np.polyfit(xs, ys, deg=2, cov=True)
    a2, a1, _ = coeffs
    if a2 >= 0.0:
        raise NoInteriorMaximumError("contrast profile is not concave at its maximum")
    center = float(-a1 / (2.0 * a2))
    grad = np.array([a1 / (2.0 * a2**2), -1.0 / (2.0 * a2), 0.0])
    var = float(grad @ cov @ grad)
    sigma = float(np.sqrt(max(var, 0.0)))

    cross = None
    if profile.contrast_per_mode.shape[0] > 1:
        c1 = profile.contrast_per_mode[1]
        imin = int(np.argmin(c1))
        prominence = float(c1.max() - c1[imin])
        if 0 < imin < len(x) - 1 and prominence > 0.02:
            # parabolic refinement of the antisymmetric minimum
            d1 = c1[imin + 1] - c1[imin - 1]
            d2 = c1[imin + 1] - 2.0 * c1[imin] + c1[imin - 1]
            if d2 > 0:
                cross = float(x[imin] - 0.5 * d1 / d2 * (x[1] - x[0]))
                sigma = max(sigma, abs(center - cross) / 2.0)

    return CenterEstimate(center, max(sigma, 1e-6), cross)
