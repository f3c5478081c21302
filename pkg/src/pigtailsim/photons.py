"""Pulsed single-photon stream simulation and correlation estimators.

The stream model is phenomenological and per-pulse: a genuine source
photon reaches the fiber with probability a(P) (saturating in pump
power, scaled so the mean detected rate reproduces the configured
efficiency chain), and an extra distinguishable photon rides along with
probability b = r a chosen so the pulsed g2(0) equals the configured
multiphoton probability.  HBT routes every photon through a balanced
splitter; HOM sends photons through an unbalanced interferometer with a
one-period delay, where a source photon taking the long path meets its
successor taking the short path and bunches with probability equal to
the intrinsic indistinguishability.  The detector model applies
efficiency, Gaussian jitter, dark counts and a per-channel dead time.

Estimators integrate coincidence histograms over whole repetition
periods.  g2(0) is the central-peak area over the mean side-peak area;
HOM visibility is 1 - 2 A0 / mean(A_k, |k| >= 2), the +-1 peaks being
excluded because the delay line correlates them.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .budget import EfficiencyBudget, Measured, predict_brightness
from .errors import (
    EmptyChannelError,
    InsufficientSidePeaksError,
    NonConvergenceError,
    TooFewSamplesError,
)

HBT = "hbt"
HOM = "hom"

TAG_FILE_MAGIC = b"PTAG"
TAG_FILE_VERSION = 1
TAG_CSV_HEADER = "channel,timestamp_ps"


@dataclass(frozen=True)
class DetectorModel:
    """Single-photon detector imperfections.

    A non-zero dead time is supported (with the pulsed-stream rate
    inversion in TimeTags.dead_time_corrected_rate_hz), but the default
    is zero: at a 79 MHz repetition rate a 25 ns dead window spans two
    pulse periods and distorts the correlation side peaks through
    conditional-survival and bunched-pair pile-up effects at the few
    0.1% level the headline estimators care about.
    """

    efficiency: float = 0.9
    jitter_ps: float = 30.0
    dead_time_ps: float = 0.0
    dark_rate_hz: float = 100.0

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("detector efficiency must be in (0, 1]")


@dataclass(frozen=True)
class SourceParams:
    """Operating parameters of the pigtailed source.

    The per-pulse photon probability is derived from the efficiency
    chain: the chain product is the fibered brightness at the default
    operating power (itself chosen to sit at 95.2% of saturation), and
    the multiphoton admixture is set so the pulsed g2(0) equals
    multiphoton_prob.
    """

    rep_rate_hz: float = 79.21e6
    occupation_probability: float = 0.70
    efficiency_chain: EfficiencyBudget = field(
        default_factory=lambda: EfficiencyBudget.reference_values()
    )
    multiphoton_prob: float = 0.013
    intrinsic_indistinguishability: float = 0.975
    decay_time_ps: float = 80.0
    saturation_power: float = 1.0
    degree_of_polarization: float = 0.95
    detector: DetectorModel = field(default_factory=DetectorModel)

    # fraction of saturation at the default operating power:
    # 16.75 MHz / 17.60 MHz
    operating_saturation_fraction: float = 16.75 / 17.60

    def __post_init__(self):
        for name in (
            "occupation_probability",
            "multiphoton_prob",
            "intrinsic_indistinguishability",
            "degree_of_polarization",
        ):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.rep_rate_hz <= 0:
            raise ValueError("repetition rate must be positive")

    @property
    def period_ps(self) -> float:
        return 1e12 / self.rep_rate_hz

    @property
    def default_excitation_power(self) -> float:
        """Power at which the source sits at the operating point."""
        return -self.saturation_power * np.log(
            1.0 - self.operating_saturation_fraction
        )

    @property
    def extra_photon_ratio(self) -> float:
        """b/a ratio reproducing g2(0) = multiphoton_prob.

        g2 = 2 a b / (a + b)^2 with b = r a gives
        r = ((1 - g2) - sqrt(1 - 2 g2)) / g2.
        """
        g2 = self.multiphoton_prob
        if g2 <= 0.0:
            return 0.0
        return float(((1.0 - g2) - np.sqrt(1.0 - 2.0 * g2)) / g2)

    def fiber_photon_probability(self, excitation_power: float) -> float:
        """Mean source-photon probability per pulse in the fiber, a(P)."""
        brightness = predict_brightness(self.efficiency_chain).value
        mean_op = brightness / (1.0 - self.multiphoton_prob)
        a_op = mean_op / (1.0 + self.extra_photon_ratio)
        sat_op = self.operating_saturation_fraction
        sat = 1.0 - np.exp(-excitation_power / self.saturation_power)
        return float(a_op * sat / sat_op)


@dataclass
class TimeTags:
    """Per-channel sorted photon arrival times, in integer picoseconds."""

    channels: dict
    kind: str
    rep_rate_hz: float
    duration_ps: float

    def __post_init__(self):
        clean = {}
        for ch, ts in self.channels.items():
            arr = np.asarray(ts, dtype=np.int64)
            if np.any(np.diff(arr) < 0):
                raise ValueError(f"channel {ch} timestamps are not sorted")
            clean[int(ch)] = arr
        self.channels = clean

    @property
    def total_counts(self) -> int:
        return int(sum(len(v) for v in self.channels.values()))

    def detected_rate_hz(self) -> float:
        if self.duration_ps <= 0:
            return 0.0
        return self.total_counts / (self.duration_ps * 1e-12)

    def dead_time_corrected_rate_hz(self, detector: "DetectorModel") -> float:
        """Raw rate corrected for the per-channel dead-time kill.

        For a pulsed stream whose period is shorter than the dead time,
        an event is lost exactly when the same channel fired one pulse
        earlier, so the surviving per-pulse probability obeys
        p_surv = p (1 - p_surv); inverting gives p = p_surv/(1 - p_surv)
        per channel.
        """
        if self.duration_ps <= 0:
            return 0.0
        period_ps = 1e12 / self.rep_rate_hz
        if detector.dead_time_ps <= period_ps:
            return self.detected_rate_hz()
        n_pulses = self.duration_ps / period_ps
        total = 0.0
        for ts in self.channels.values():
            p_surv = len(ts) / n_pulses
            total += p_surv / (1.0 - p_surv)
        return total * self.rep_rate_hz

    def to_binary(self, path) -> None:
        """Write the tag file format.

        Layout (little-endian): magic "PTAG", uint16 version, uint8 kind
        (0 = HBT, 1 = HOM), float64 repetition rate [Hz], float64
        duration [ps], uint64 record count, then one record per photon:
        uint8 channel + uint64 timestamp [ps], sorted by timestamp.
        """
        records = []
        for ch, ts in self.channels.items():
            records.append(np.stack([np.full(len(ts), ch, dtype=np.int64), ts]))
        merged = (
            np.concatenate(records, axis=1)
            if records
            else np.zeros((2, 0), dtype=np.int64)
        )
        order = np.argsort(merged[1], kind="stable")
        merged = merged[:, order]
        with open(path, "wb") as fh:
            fh.write(TAG_FILE_MAGIC)
            fh.write(struct.pack("<H", TAG_FILE_VERSION))
            fh.write(struct.pack("<B", 0 if self.kind == HBT else 1))
            fh.write(struct.pack("<d", self.rep_rate_hz))
            fh.write(struct.pack("<d", self.duration_ps))
            fh.write(struct.pack("<Q", merged.shape[1]))
            body = np.zeros(
                merged.shape[1], dtype=np.dtype([("ch", "u1"), ("t", "<u8")])
            )
            body["ch"] = merged[0]
            body["t"] = merged[1]
            fh.write(body.tobytes())

    @classmethod
    def from_binary(cls, path) -> "TimeTags":
        with open(path, "rb") as fh:
            if fh.read(4) != TAG_FILE_MAGIC:
                raise ValueError("not a time-tag binary file")
            (version,) = struct.unpack("<H", fh.read(2))
            if version != TAG_FILE_VERSION:
                raise ValueError(f"unsupported tag-file version {version}")
            (kind_byte,) = struct.unpack("<B", fh.read(1))
            (rep,) = struct.unpack("<d", fh.read(8))
            (duration,) = struct.unpack("<d", fh.read(8))
            (n,) = struct.unpack("<Q", fh.read(8))
            body = np.frombuffer(
                fh.read(n * 9), dtype=np.dtype([("ch", "u1"), ("t", "<u8")])
            )
        channels = {}
        for ch in np.unique(body["ch"]):
            ts = np.sort(body["t"][body["ch"] == ch].astype(np.int64))
            channels[int(ch)] = ts
        return cls(channels, HBT if kind_byte == 0 else HOM, rep, duration)

    def to_csv(self, path) -> None:
        """Debug CSV: channel,timestamp_ps; sorted by timestamp."""
        rows = []
        for ch, ts in self.channels.items():
            rows.extend((int(t), ch) for t in ts)
        rows.sort()
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(TAG_CSV_HEADER + "\n")
            for t, ch in rows:
                fh.write(f"{ch},{t}\n")


@dataclass
class CoincidenceHistogram:
    """Time-delay histogram of cross-channel coincidences."""

    bin_edges_ps: np.ndarray
    counts: np.ndarray
    kind: str
    rep_rate_hz: float

    def __post_init__(self):
        self.bin_edges_ps = np.asarray(self.bin_edges_ps, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if len(self.bin_edges_ps) != len(self.counts) + 1:
            raise ValueError("bin_edges must be one longer than counts")
        widths = np.diff(self.bin_edges_ps)
        if not np.allclose(widths, widths[0]):
            raise ValueError("bins must be uniform")
        if np.any(self.counts < 0):
            raise ValueError("counts must be >= 0")

    @property
    def bin_centers_ps(self) -> np.ndarray:
        return 0.5 * (self.bin_edges_ps[:-1] + self.bin_edges_ps[1:])

    def peak_areas(self) -> dict[int, int]:
        """Total counts in whole-period windows around each k * T delay."""
        period = 1e12 / self.rep_rate_hz
        centers = self.bin_centers_ps
        k = np.round(centers / period).astype(int)
        window = self.bin_edges_ps[-1]
        kmax = int(np.floor((window - period / 2.0) / period))
        areas = {}
        for kk in range(-kmax, kmax + 1):
            areas[kk] = int(self.counts[k == kk].sum())
        return areas

    def to_csv(self, path) -> None:
        """Histogram CSV: delay_ps,counts (bin centers)."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("delay_ps,counts\n")
            for c, n in zip(self.bin_centers_ps, self.counts):
                fh.write(f"{c:.9g},{n}\n")


@dataclass(frozen=True)
class PhotonMetrics:
    g2_zero: Measured
    v_hom: Measured
    indistinguishability: Measured
    detected_rate_hz: float
    fibered_brightness: float


@dataclass(frozen=True)
class SaturationFit:
    r_inf_hz: float
    p_sat: float
    residual: float
    well_constrained: bool = True


_BLOCK = 1 << 20


def _detect(
    times_ps: np.ndarray,
    detector: DetectorModel,
    duration_ps: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Apply efficiency, jitter, dark counts and dead time to one channel."""
    keep = rng.random(len(times_ps)) < detector.efficiency
    t = times_ps[keep].astype(float)
    if detector.jitter_ps > 0:
        t = t + rng.normal(0.0, detector.jitter_ps, len(t))
    n_dark = rng.poisson(detector.dark_rate_hz * duration_ps * 1e-12)
    if n_dark > 0:
        t = np.concatenate([t, rng.uniform(0.0, duration_ps, n_dark)])
    t = np.sort(t)
    t = np.maximum(t, 0.0).astype(np.int64)
    if detector.dead_time_ps > 0 and len(t) > 1:
        t = _dead_time_filter(t, detector.dead_time_ps)
    return t


def _dead_time_filter(t: np.ndarray, dead_ps: float) -> np.ndarray:
    """Greedy dead-time filter: drop events closer than dead_ps to the
    previous kept event.  Vectorized by iterating passes; each pass
    removes events whose surviving predecessor is too close, and chains
    longer than a couple of events are rare enough that this converges
    in a few passes."""
    keep = t
    while True:
        gaps = np.diff(keep)
        viol = np.where(gaps < dead_ps)[0] + 1
        if len(viol) == 0:
            return keep
        # only drop the first violator of each chain this pass; events
        # after it may become legal relative to the survivor
        first_of_chain = viol[np.concatenate(([True], np.diff(viol) > 1))]
        mask = np.ones(len(keep), dtype=bool)
        mask[first_of_chain] = False
        keep = keep[mask]


def simulate_stream(
    params: SourceParams,
    n_pulses: int,
    excitation_power: float | None = None,
    seed: int = 0,
    kind: str = HBT,
) -> TimeTags:
    """Simulate a detected two-channel photon stream.

    kind = "hbt": photons hit a balanced splitter feeding two detectors.
    kind = "hom": photons traverse an unbalanced Mach-Zehnder with a
    one-period delay; a source photon taking the long path overlaps its
    successor taking the short path at the output splitter and bunches
    with probability intrinsic_indistinguishability.  Extra (multi-
    photon) admixture photons never interfere.
    """
    if kind not in (HBT, HOM):
        raise ValueError(f"unknown experiment kind {kind!r}")
    if n_pulses < 1:
        raise ValueError("need at least one pulse")
    power = (
        params.default_excitation_power if excitation_power is None else excitation_power
    )
    a = params.fiber_photon_probability(power)
    b = a * params.extra_photon_ratio
    period = params.period_ps
    duration_ps = (n_pulses + 2) * period
    m_int = params.intrinsic_indistinguishability

    if n_pulses < 1_000_000:
        warnings.warn(
            "fewer than 1e6 pulses: correlation statistics will be poor",
            stacklevel=2,
        )

    rng = np.random.default_rng([seed, 0])
    out0: list[np.ndarray] = []
    out1: list[np.ndarray] = []

    # A QD photon taking the long path out of a block's final pulse
    # would interfere with the next block's first short photon; treating
    # that one boundary pair per block as distinguishable changes peak
    # areas by parts in 1e5 and keeps blocks independent.
    for start in range(0, n_pulses, _BLOCK):
        n = min(_BLOCK, n_pulses - start)
        qd = rng.random(n) < a
        xt = rng.random(n) < b
        qd_long = rng.random(n) < 0.5
        xt_long = rng.random(n) < 0.5
        qd_port = rng.integers(0, 2, n).astype(np.int8)
        xt_port = rng.integers(0, 2, n).astype(np.int8)
        common_port = rng.integers(0, 2, n).astype(np.int8)
        bunch_draw = rng.random(n) < m_int

        if kind == HOM:
            # slot s receives QD(s, short) and QD(s-1, long): those two
            # interfere.  When they bunch, both take common_port[s].
            prev_qd_long = np.zeros(n, dtype=bool)
            prev_qd_long[1:] = (qd & qd_long)[:-1]

            pair = qd & ~qd_long & prev_qd_long
            bunched = pair & bunch_draw
            qd_port = np.where(bunched, common_port, qd_port)
            # long photons of pulse s-1 whose successor bunched adopt
            # the same common port
            ports = qd_port.copy()
            ports[:-1] = np.where(bunched[1:], common_port[1:], ports[:-1])

            idx = np.arange(start, start + n, dtype=np.int64)
            delay = rng.exponential(params.decay_time_ps, n)
            t_qd = (idx + qd_long.astype(np.int64)) * period + delay
            qd_times = t_qd[qd]
            qd_ports = ports[qd]

            t_xt = (idx + xt_long.astype(np.int64)) * period + rng.exponential(
                params.decay_time_ps, n
            )
            xt_times = t_xt[xt]
            xt_ports = xt_port[xt]
        else:
            idx = np.arange(start, start + n, dtype=np.int64)
            qd_times = (idx[qd]) * period + rng.exponential(
                params.decay_time_ps, int(qd.sum())
            )
            qd_ports = qd_port[qd]
            xt_times = (idx[xt]) * period + rng.exponential(
                params.decay_time_ps, int(xt.sum())
            )
            xt_ports = xt_port[xt]

        times = np.concatenate([qd_times, xt_times])
        ports = np.concatenate([qd_ports, xt_ports])
        out0.append(times[ports == 0])
        out1.append(times[ports == 1])

    ch0 = np.sort(np.concatenate(out0)) if out0 else np.array([], dtype=float)
    ch1 = np.sort(np.concatenate(out1)) if out1 else np.array([], dtype=float)
    det_rng0 = np.random.default_rng([seed, 1])
    det_rng1 = np.random.default_rng([seed, 2])
    channels = {
        0: _detect(ch0, params.detector, duration_ps, det_rng0),
        1: _detect(ch1, params.detector, duration_ps, det_rng1),
    }
    return TimeTags(channels, kind, params.rep_rate_hz, duration_ps)


def histogram_coincidences(
    tags: TimeTags,
    window_ps: float = 100_000.0,
    bin_width_ps: float = 200.0,
    start_channel: int = 0,
    stop_channel: int = 1,
) -> CoincidenceHistogram:
    """Cross-correlate two channels into a delay histogram over +-window."""
    if bin_width_ps <= 0 or window_ps <= 0:
        raise ValueError("window and bin width must be positive")
    if bin_width_ps > window_ps:
        raise ValueError("bin width exceeds the correlation window")
    if start_channel not in tags.channels or stop_channel not in tags.channels:
        raise EmptyChannelError("correlation requires both channels present")
    t0 = tags.channels[start_channel]
    t1 = tags.channels[stop_channel]
    if len(t0) == 0 or len(t1) == 0:
        raise EmptyChannelError("correlation requires counts on both channels")

    n_bins = int(np.ceil(window_ps / bin_width_ps))
    edges = np.linspace(-n_bins * bin_width_ps, n_bins * bin_width_ps, 2 * n_bins + 1)
    counts = np.zeros(2 * n_bins, dtype=np.int64)

    # all stop events within +-window of each start event
    lo = np.searchsorted(t1, t0 - window_ps, side="left")
    hi = np.searchsorted(t1, t0 + window_ps, side="right")
    per_start = hi - lo
    step = max(1, int(5e6 // max(1, int(per_start.mean() + 1))))
    for s in range(0, len(t0), step):
        e = min(s + step, len(t0))
        m = per_start[s:e]
        total = int(m.sum())
        if total == 0:
            continue
        # gather indices lo[i] .. hi[i] for every start in the chunk
        offsets = np.concatenate(([0], np.cumsum(m)[:-1]))
        gather = np.repeat(lo[s:e], m) + (np.arange(total) - np.repeat(offsets, m))
        delays = t1[gather] - np.repeat(t0[s:e], m)
        c, _ = np.histogram(delays.astype(float), bins=edges)
        counts += c
    return CoincidenceHistogram(edges, counts, tags.kind, tags.rep_rate_hz)


def _side_peak_stats(hist: CoincidenceHistogram, exclude: set[int]) -> tuple[float, int, int]:
    areas = hist.peak_areas()
    side = {k: v for k, v in areas.items() if k != 0 and k not in exclude}
    if len(side) < 6:
        raise InsufficientSidePeaksError(
            f"need >= 6 side peaks, histogram spans {len(side)}"
        )
    total = sum(side.values())
    return total / len(side), total, len(side)


def g2_zero(hist: CoincidenceHistogram) -> Measured:
    """Second-order autocorrelation at zero delay from an HBT histogram.

    Central-peak area over the mean side-peak area with Poisson error
    propagation.  The +-1 peaks are excluded from the reference: with a
    detector dead time spanning two repetition periods they are
    enhanced by conditional-survival correlations.
    """
    if hist.kind != HBT:
        raise ValueError("g2_zero expects an HBT histogram")
    mean_side, total_side, n_side = _side_peak_stats(hist, exclude={-1, 1})
    a0 = hist.peak_areas()[0]
    if mean_side <= 0:
        raise InsufficientSidePeaksError("side peaks are empty")
    value = a0 / mean_side
    rel = np.sqrt((1.0 / a0 if a0 > 0 else 1.0) + 1.0 / total_side)
    return Measured(float(value), float(value * rel if a0 > 0 else 1.0 / mean_side))


def hom_visibility(hist: CoincidenceHistogram) -> Measured:
    """Two-photon interference visibility from a HOM histogram.

    V = 1 - 2 A0 / mean(A_k) over |k| >= 2; the +-1 peaks are excluded
    from the reference because the one-period delay line correlates
    them (their area is 3/4 of an uncorrelated peak for an ideal
    single-photon stream).
    """
    if hist.kind != HOM:
        raise ValueError("hom_visibility expects a HOM histogram")
    mean_side, total_side, n_side = _side_peak_stats(hist, exclude={-1, 1})
    a0 = hist.peak_areas()[0]
    if mean_side <= 0:
        raise InsufficientSidePeaksError("side peaks are empty")
    ratio = a0 / mean_side
    value = 1.0 - 2.0 * ratio
    sigma = 2.0 * ratio * np.sqrt((1.0 / a0 if a0 > 0 else 1.0) + 1.0 / total_side)
    if a0 == 0:
        sigma = 2.0 / mean_side
    return Measured(float(value), float(sigma))


@dataclass(frozen=True)
class InterferometerModel:
    """Imperfections of the HOM interferometer used for correction."""

    fringe_contrast_deficit: float = 0.0  # epsilon; (1-eps) is contrast
    reflectance: float = 0.5
    transmittance: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.fringe_contrast_deficit < 1.0:
            raise ValueError("fringe contrast deficit must lie in [0, 1)")
        if self.reflectance <= 0.0 or self.transmittance <= 0.0:
            raise ValueError("splitter R and T must be positive")

    @property
    def correction_factor(self) -> float:
        r, t = self.reflectance, self.transmittance
        return (1.0 - self.fringe_contrast_deficit) ** 2 * 4.0 * r * t / (r + t) ** 2


def indistinguishability(
    v_hom: Measured | float,
    g2: Measured | float,
    interferometer: InterferometerModel | None = None,
) -> tuple[Measured, bool]:
    """Photon indistinguishability corrected for multiphoton events and
    interferometer imperfections.

    M = (V + 2 g2) / ((1 - eps)^2 * 4 R T / (R + T)^2); the ideal
    interferometer reduces this to V + 2 g2.  Returns (M, in_range);
    in_range is False when the corrected value exceeds 1, in which case
    the value is clamped.
    """
    v = v_hom if isinstance(v_hom, Measured) else Measured(float(v_hom))
    g = g2 if isinstance(g2, Measured) else Measured(float(g2))
    if not 0.0 <= v.value <= 1.0 or not 0.0 <= g.value <= 1.0:
        raise ValueError("V and g2 must lie in [0, 1]")
    itf = interferometer if interferometer is not None else InterferometerModel()
    denom = itf.correction_factor
    value = (v.value + 2.0 * g.value) / denom
    sigma = float(np.sqrt(v.sigma**2 + 4.0 * g.sigma**2) / denom)
    in_range = value <= 1.0
    return Measured(float(min(value, 1.0)), sigma), in_range


def analyze_stream(
    params: SourceParams,
    hbt: CoincidenceHistogram,
    hom: CoincidenceHistogram,
    detected_rate_hz: float,
    interferometer: InterferometerModel | None = None,
) -> PhotonMetrics:
    """Bundle the three headline metrics plus brightness bookkeeping.

    The fibered brightness is the detector-efficiency-corrected rate per
    pulse, discounted by the multiphoton fraction: B = (rate_corrected /
    rep) * (1 - g2).
    """
    g2 = g2_zero(hbt)
    v = hom_visibility(hom)
    m, _ = indistinguishability(v, g2, interferometer)
    corrected = detected_rate_hz / params.detector.efficiency
    brightness = corrected / params.rep_rate_hz * (1.0 - g2.value)
    return PhotonMetrics(
        g2_zero=g2,
        v_hom=v,
        indistinguishability=m,
        detected_rate_hz=detected_rate_hz,
        fibered_brightness=float(brightness),
    )


def fit_saturation(points) -> SaturationFit:
    """Least-squares fit of R(P) = R_inf (1 - exp(-P / P_sat)).

    points is a sequence of (power, rate_hz).  Requires >= 4 points
    spanning both sides of the saturation knee; a fit whose P_sat is
    not constrained by the data (all powers far above saturation) is
    returned with well_constrained=False.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 4:
        raise ValueError("need at least 4 (power, rate) points")
    power, rate = pts[:, 0], pts[:, 1]

    def model(p, r_inf, p_sat):
        return r_inf * (1.0 - np.exp(-p / p_sat))

    r0 = float(rate.max())
    p0 = float(np.median(power)) or 1.0
    try:
        popt, pcov = curve_fit(
            model, power, rate, p0=(r0, p0), maxfev=10_000,
            bounds=([0.0, 1e-12], [np.inf, np.inf]),
        )
    except (RuntimeError, ValueError) as exc:
        raise NonConvergenceError(f"saturation fit failed: {exc}") from exc
    r_inf, p_sat = (float(v) for v in popt)
    resid = float(np.sqrt(np.mean((rate - model(power, *popt)) ** 2)))
    rel_psat_err = (
        float(np.sqrt(pcov[1, 1]) / p_sat) if np.isfinite(pcov[1, 1]) else np.inf
    )
    well = bool(power.min() < 2.0 * p_sat) and rel_psat_err < 1.0
    return SaturationFit(r_inf, p_sat, resid, well)


@dataclass(frozen=True)
class StabilityStats:
    mean: float
    relative_std: float
    drift_per_hour: float
    n_samples: int


def stability_stats(times_s, values) -> StabilityStats:
    """Mean, relative standard deviation and linear drift of a series."""
    t = np.asarray(times_s, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise ValueError("times and values must be 1D arrays of equal length")
    if len(t) < 10:
        raise TooFewSamplesError("need at least 10 samples")
    mean = float(v.mean())
    rel = float(v.std(ddof=1) / mean) if mean != 0 else np.inf
    slope = float(np.polyfit(t / 3600.0, v, 1)[0])
    return StabilityStats(mean, rel, slope, len(t))


def simulate_stability_series(
    mean_value: float,
    relative_std: float,
    duration_h: float = 10.0,
    sample_interval_s: float = 60.0,
    correlation: float = 0.3,
    drift_per_hour: float = 0.0,
    seed: int = 0,
):
    """Generate a correlated (AR(1)) stability time series.

    The stationary relative standard deviation equals relative_std; a
    linear drift can be superimposed.  Returns (times_s, values).
    """
    n = int(duration_h * 3600.0 / sample_interval_s)
    rng = np.random.default_rng([seed, 3])
    sigma = mean_value * relative_std
    innov = sigma * np.sqrt(1.0 - correlation**2)
    noise = np.empty(n)
    x = rng.normal(0.0, sigma)
    for i in range(n):
        x = correlation * x + rng.normal(0.0, innov)
        noise[i] = x
    t = np.arange(n) * sample_interval_s
    values = mean_value + noise + drift_per_hour * t / 3600.0
    return t, values
