"""Stateful virtual pigtailing workstation.

A session is a sequence of pure state transitions: every operation takes
a RigState and returns a new one (plus any measurement products), so
snapshots are free and replay is exact.  All randomness is derived from
the session seed and a per-event draw counter, which makes identical
seed + operation sequence give identical event logs and final states.

The phase machine is free -> landed -> secured -> cold, with cold
reversible to secured via warmup.  The stage z coordinate is the stamp
height above the contact pads: z = 0 means landed, and the fiber-chip
gap is stamp_design_gap + z while warm.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    InvalidConfigError,
    LandingFailureError,
    MotionForbiddenError,
    NoInteriorMaximumError,
    PhaseError,
    TooFewFringesError,
)
from .modes import DeviceSpec
from .spectra import (
    Spectrum,
    contrast_profile,
    estimate_center,
    estimate_gap,
    find_mode_dips,
    synth_reflectivity,
    thermal_shifted_wavelength,
)

FREE = "free"
LANDED = "landed"
SECURED = "secured"
COLD = "cold"

ROOM_TEMPERATURE_K = 300.0
ACQUIRE_SECONDS = 1.0
MOVE_SECONDS = 0.5
COOLDOWN_STEP_SECONDS = 120.0


@dataclass(frozen=True)
class RigConfig:
    """Workstation model parameters; all noise amplitudes must be >= 0."""

    stamp_design_gap_um: float = 3.0
    cold_gap_um: float = 3.5
    stage_step_noise_um: float = 0.005
    spectrum_noise_rel: float = 0.005
    drift_rate_um_per_hour: float = 0.0
    thermal_shift_scale_nm: float = 5.0
    thermal_shift_knee_k: float = 120.0
    cycle_jitter_nm: float = 0.010
    initial_misalignment_um: float = 5.0
    securing_sigma_um: float = 0.05
    base_temperature_k: float = 2.4
    start_height_um: float = 200.0
    band_nm: tuple = (850.0, 1000.0)
    resolution_nm: float = 0.02
    peak_contrasts: tuple = (0.90, 0.60)
    scan_halfwidth_um: float = 3.0
    scan_step_um: float = 0.25
    search_radius_um: float = 10.0
    max_align_iterations: int = 5

    def __post_init__(self):
        noise_fields = (
            self.stage_step_noise_um,
            self.spectrum_noise_rel,
            self.drift_rate_um_per_hour,
            self.cycle_jitter_nm,
            self.initial_misalignment_um,
            self.securing_sigma_um,
        )
        if any(v < 0 for v in noise_fields):
            raise InvalidConfigError("noise parameters must be >= 0")
        if self.stamp_design_gap_um <= 0 or self.cold_gap_um <= 0:
            raise InvalidConfigError("gaps must be positive")
        if not 2.4 <= self.base_temperature_k <= 300.0:
            raise InvalidConfigError("base temperature must lie in [2.4, 300] K")
        if self.scan_step_um <= 0 or self.scan_halfwidth_um <= 0:
            raise InvalidConfigError("scan geometry must be positive")


@dataclass(frozen=True)
class Event:
    seq: int
    time_s: float
    kind: str
    payload: dict = field(default_factory=dict)

    def as_json(self) -> str:
        return json.dumps(
            {"seq": self.seq, "time_s": self.time_s, "event": self.kind,
             "payload": self.payload},
            sort_keys=True,
        )


@dataclass(frozen=True)
class RigState:
    """Immutable snapshot of the virtual workstation.

    true_pillar_center_um and fiber_position_um are hidden from the
    estimators; only spectra derived from them are observable.
    """

    device: DeviceSpec
    config: RigConfig
    seed: int
    stage_position_um: tuple[float, float, float]
    fiber_position_um: tuple[float, float]
    true_pillar_center_um: tuple[float, float]
    gap_um: float
    temperature_k: float
    phase: str
    ferrule_locked: bool
    sim_time_s: float
    n_draws: int
    event_log: tuple[Event, ...]

    @property
    def true_offset_um(self) -> float:
        dx = self.fiber_position_um[0] - self.true_pillar_center_um[0]
        dy = self.fiber_position_um[1] - self.true_pillar_center_um[1]
        return float(np.hypot(dx, dy))

    def expected_mode_wavelengths_nm(self) -> list[float]:
        return [
            thermal_shifted_wavelength(
                w,
                self.temperature_k,
                self.config.thermal_shift_scale_nm,
                self.config.thermal_shift_knee_k,
            )
            for w in self.device.pillar.mode_wavelengths_nm
        ]


@dataclass(frozen=True)
class AlignmentReport:
    residual_offset_um: float
    final_gap_um: float
    n_spectra_acquired: int
    trajectory: tuple
    success: bool
    iterations: int

    def as_json(self) -> str:
        return json.dumps(
            {
                "residual_offset_um": self.residual_offset_um,
                "final_gap_um": self.final_gap_um,
                "n_spectra_acquired": self.n_spectra_acquired,
                "trajectory": [list(p) for p in self.trajectory],
                "success": self.success,
                "iterations": self.iterations,
            },
            sort_keys=True,
        )


@dataclass(frozen=True)
class CycleReport:
    mode_wavelengths_nm: tuple  # (n_cycles, n_modes)
    mode_contrasts: tuple  # (n_cycles, n_modes)
    fundamental_wavelength_std_nm: float
    second_mode_contrast_min: float
    second_mode_contrast_max: float
    n_cycles: int
    std_defined: bool

    def as_json(self) -> str:
        return json.dumps(
            {
                "mode_wavelengths_nm": [list(row) for row in self.mode_wavelengths_nm],
                "mode_contrasts": [list(row) for row in self.mode_contrasts],
                "fundamental_wavelength_std_nm": self.fundamental_wavelength_std_nm,
                "second_mode_contrast_min": self.second_mode_contrast_min,
                "second_mode_contrast_max": self.second_mode_contrast_max,
                "n_cycles": self.n_cycles,
                "std_defined": self.std_defined,
            },
            sort_keys=True,
        )


def write_event_log(state: RigState, path) -> None:
    """Export the event log as newline-delimited JSON records."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ev in state.event_log:
            fh.write(ev.as_json() + "\n")


def _draw_rng(state: RigState) -> np.random.Generator:
    return np.random.default_rng([state.seed, state.n_draws])


def _log(state: RigState, kind: str, payload: dict, dt_s: float = 0.0,
         draws: int = 0, **changes) -> RigState:
    ev = Event(len(state.event_log), round(state.sim_time_s + dt_s, 6), kind, payload)
    return replace(
        state,
        sim_time_s=state.sim_time_s + dt_s,
        n_draws=state.n_draws + draws,
        event_log=state.event_log + (ev,),
        **changes,
    )


def new_session(device: DeviceSpec, config: RigConfig, seed: int) -> RigState:
    """Start a fresh session with the fiber high above a hidden pillar."""
    rng = np.random.default_rng([int(seed), 0])
    radius = config.initial_misalignment_um
    if radius > 0:
        r = radius * np.sqrt(rng.uniform())
        theta = rng.uniform(0.0, 2.0 * np.pi)
        center = (float(r * np.cos(theta)), float(r * np.sin(theta)))
    else:
        center = (0.0, 0.0)
    z0 = max(config.start_height_um - config.stamp_design_gap_um, 0.0)
    state = RigState(
        device=device,
        config=config,
        seed=int(seed),
        stage_position_um=(0.0, 0.0, z0),
        fiber_position_um=(0.0, 0.0),
        true_pillar_center_um=center,
        gap_um=config.stamp_design_gap_um + z0,
        temperature_k=ROOM_TEMPERATURE_K,
        phase=FREE,
        ferrule_locked=False,
        sim_time_s=0.0,
        n_draws=1,
        event_log=(),
    )
    return _log(state, "session-created", {"seed": int(seed)})


def move_stage(state: RigState, dx: float, dy: float, dz: float) -> RigState:
    """Move the stage; z motion lands the ferrule when it reaches contact.

    Motion rules: all axes while free; x/y only while landed; nothing
    once secured or cold.
    """
    if state.phase in (SECURED, COLD):
        raise MotionForbiddenError(f"stage motion forbidden in phase {state.phase!r}")
    if state.phase == LANDED and dz != 0.0:
        raise MotionForbiddenError("z motion forbidden once landed")

    x, y, z = state.stage_position_um
    fx, fy = state.fiber_position_um
    rng = _draw_rng(state)
    sigma = state.config.stage_step_noise_um
    ex = float(rng.normal(0.0, sigma)) if dx != 0.0 else 0.0
    ey = float(rng.normal(0.0, sigma)) if dy != 0.0 else 0.0

    landed_now = False
    new_z = z
    if dz != 0.0:
        new_z = z + dz
        if new_z <= 0.0:
            new_z = 0.0
            landed_now = True

    new_state_fields = dict(
        stage_position_um=(x + dx, y + dy, new_z),
        fiber_position_um=(fx + dx + ex, fy + dy + ey),
        gap_um=state.config.stamp_design_gap_um + new_z,
    )
    if landed_now:
        new_state_fields["phase"] = LANDED
        new_state_fields["ferrule_locked"] = True
    payload = {"dx": dx, "dy": dy, "dz": dz, "landed": landed_now}
    return _log(state, "stage-move", payload, dt_s=MOVE_SECONDS, draws=1,
                **new_state_fields)


def _drifted_offset_um(state: RigState) -> float:
    """True radial offset including slow lateral drift, if configured."""
    dx = state.fiber_position_um[0] - state.true_pillar_center_um[0]
    dy = state.fiber_position_um[1] - state.true_pillar_center_um[1]
    rate = state.config.drift_rate_um_per_hour
    if rate > 0.0:
        # drift direction is a session-level latent, on its own stream
        direction = np.random.default_rng([state.seed, 987654321]).uniform(0, 2 * np.pi)
        amount = rate * state.sim_time_s / 3600.0
        dx += amount * np.cos(direction)
        dy += amount * np.sin(direction)
    return float(np.hypot(dx, dy))


def acquire_spectrum(
    state: RigState, mode_wavelength_offset_nm: float = 0.0
) -> tuple[RigState, Spectrum]:
    """Acquire one reflectivity spectrum at the current state."""
    rng = _draw_rng(state)
    spectrum = synth_reflectivity(
        state.device,
        gap_um=state.gap_um,
        offset_um=_drifted_offset_um(state),
        temperature_k=state.temperature_k,
        band_nm=state.config.band_nm,
        resolution_nm=state.config.resolution_nm,
        noise_rel=state.config.spectrum_noise_rel,
        rng=rng,
        peak_contrasts=state.config.peak_contrasts,
        thermal_scale_nm=state.config.thermal_shift_scale_nm,
        thermal_knee_k=state.config.thermal_shift_knee_k,
        mode_wavelength_offset_nm=mode_wavelength_offset_nm,
    )
    new_state = _log(
        state,
        "spectrum-acquired",
        {"gap_um": round(state.gap_um, 6), "temperature_k": state.temperature_k},
        dt_s=ACQUIRE_SECONDS,
        draws=1,
    )
    return new_state, spectrum


def vertical_landing(state: RigState) -> RigState:
    """Lower the ferrule until the stamp lands, gap-monitored throughout.

    The descent step is a fraction of the estimated remaining height, so
    steps shrink as the gap closes.  A gap estimate that diverges from
    the commanded height signals a stage fault and raises
    LandingFailureError.
    """
    if state.phase != FREE:
        raise PhaseError(f"vertical landing requires phase 'free', not {state.phase!r}")

    target = state.config.stamp_design_gap_um
    for _ in range(200):
        if state.stage_position_um[2] <= 0.0:
            break
        state, spectrum = acquire_spectrum(state)
        near_contact = False
        try:
            est = estimate_gap(spectrum)
        except TooFewFringesError:
            est = None
            near_contact = True
        if est is not None:
            if abs(est.gap_um - state.gap_um) > max(1.0, 0.3 * state.gap_um):
                raise LandingFailureError(
                    f"gap estimate {est.gap_um:.2f} um diverges from commanded "
                    f"{state.gap_um:.2f} um"
                )
            remaining = est.gap_um - target
        else:
            remaining = 0.4
        dz = -max(0.5 * remaining, 0.2)
        dz = max(dz, -state.stage_position_um[2] - 1.0)  # allow through-contact
        state = move_stage(state, 0.0, 0.0, dz)
        if near_contact and state.phase == FREE:
            # cannot see fringes and not yet landed: creep down
            continue
    else:
        raise LandingFailureError("descent did not reach contact")

    if state.phase != LANDED:
        raise LandingFailureError("descent ended without landing")

    state, spectrum = acquire_spectrum(state)
    try:
        final = estimate_gap(spectrum).gap_um
    except TooFewFringesError:
        final = float("nan")
    return _log(state, "landed", {"estimated_gap_um": round(final, 4),
                                  "design_gap_um": target})


def _scan_axis(state: RigState, axis: int, window_center: float,
               halfwidth_um: float | None = None, step_um: float | None = None):
    """1D contrast scan of one axis around a window center.

    Returns (state, profile, n_spectra).  Offsets in the returned
    profile are relative to the window center, which keeps them
    spanning both signs regardless of where the window sits.
    """
    cfg = state.config
    halfwidth = cfg.scan_halfwidth_um if halfwidth_um is None else halfwidth_um
    step = cfg.scan_step_um if step_um is None else step_um
    rel_offsets = np.arange(-halfwidth, halfwidth + 1e-9, step)
    expected = state.expected_mode_wavelengths_nm()
    scan = []
    pos0 = state.stage_position_um[axis]
    for rel in rel_offsets:
        target = window_center + rel
        delta = target - state.stage_position_um[axis]
        state = move_stage(
            state, delta if axis == 0 else 0.0, delta if axis == 1 else 0.0, 0.0
        )
        state, spectrum = acquire_spectrum(state)
        scan.append((float(rel), spectrum))
    profile = contrast_profile(scan, state.device.pillar, expected)
    # return to the original axis position; the caller decides the move
    state = move_stage(
        state,
        (pos0 - state.stage_position_um[0]) if axis == 0 else 0.0,
        (pos0 - state.stage_position_um[1]) if axis == 1 else 0.0,
        0.0,
    )
    return state, profile, len(scan)


# Contrast below this is considered "no pillar visible in this window".
MIN_PROFILE_CONTRAST = 0.02


def _capture_raster(state: RigState):
    """Coarse 2D raster to capture a pillar the cross-scan cannot see.

    Rows are spaced 2 um so that at least one row passes within 1 um of
    the pillar, where the fundamental contrast is well above noise.
    Returns (state, best_xy or None, n_spectra).
    """
    cfg = state.config
    reach = min(cfg.search_radius_um, max(4.5, cfg.initial_misalignment_um))
    xs = np.arange(-reach, reach + 1e-9, 0.5)
    ys = np.arange(-reach, reach + 1e-9, 2.0)
    expected = state.expected_mode_wavelengths_nm()
    best = (MIN_PROFILE_CONTRAST, None)
    n = 0
    for y in ys:
        for x in xs:
            state = move_stage(
                state,
                x - state.stage_position_um[0],
                y - state.stage_position_um[1],
                0.0,
            )
            state, spectrum = acquire_spectrum(state)
            n += 1
            dips = find_mode_dips(spectrum, state.device.pillar, expected)
            if dips[0].contrast > best[0]:
                best = (dips[0].contrast, (float(x), float(y)))
    return state, best[1], n


def auto_align(state: RigState) -> tuple[RigState, AlignmentReport]:
    """Automated lateral centering by alternating x and y contrast scans.

    Each axis is scanned over +-scan_halfwidth around the current
    position, the fundamental-mode contrast profile is fitted for its
    center, and the stage moves there.  A window that sees no interior
    maximum is re-centered toward the rising edge (or stepped outward
    when no contrast is visible at all) up to the configured search
    radius.  Success requires convergence and a true residual below
    200 nm.
    """
    if state.phase not in (FREE, LANDED):
        raise PhaseError(f"auto_align requires phase free or landed, not {state.phase!r}")

    cfg = state.config
    n_spectra = 0
    trajectory = [state.stage_position_um]
    converged = False
    iterations = 0
    gave_up = False
    captured = False

    for iteration in range(1, cfg.max_align_iterations + 1):
        iterations = iteration
        corrections = []
        # the first pass covers the whole window; later passes refine
        # with a narrow, denser scan around the running center
        if iteration == 1:
            halfwidth, step = cfg.scan_halfwidth_um, cfg.scan_step_um
        else:
            halfwidth, step = 1.0, 0.2
        for axis in (0, 1):
            window_center = state.stage_position_um[axis]
            found = None
            for _attempt in range(4):
                if abs(window_center) > cfg.search_radius_um:
                    break
                state, profile, n = _scan_axis(
                    state, axis, window_center, halfwidth, step
                )
                n_spectra += n
                c0 = profile.contrast_per_mode[0]
                if c0.max() < MIN_PROFILE_CONTRAST:
                    # nothing visible: step the window outward, away from
                    # the side we have already covered
                    window_center += 2.0 * halfwidth * (
                        1 if window_center >= 0 else -1
                    )
                    continue
                try:
                    est = estimate_center(profile)
                except NoInteriorMaximumError:
                    # slide toward the rising edge and rescan
                    edge = 1 if int(np.argmax(c0)) > len(c0) // 2 else -1
                    window_center += edge * halfwidth
                    continue
                found = window_center + est.offset_um
                break
            if found is None:
                if not captured:
                    # the cross-scan cannot see the pillar: fall back to
                    # a coarse 2D raster once, then resume scanning
                    captured = True
                    state, best_xy, n = _capture_raster(state)
                    n_spectra += n
                    if best_xy is not None:
                        state = move_stage(
                            state,
                            best_xy[0] - state.stage_position_um[0],
                            best_xy[1] - state.stage_position_um[1],
                            0.0,
                        )
                        trajectory.append(state.stage_position_um)
                        corrections.append(np.inf)
                        break  # restart the axis sweep from the new spot
                gave_up = True
                break
            delta = found - state.stage_position_um[axis]
            corrections.append(abs(delta))
            state = move_stage(
                state, delta if axis == 0 else 0.0, delta if axis == 1 else 0.0, 0.0
            )
            trajectory.append(state.stage_position_um)
        if gave_up:
            break
        if corrections and max(corrections) < 0.08:
            converged = True
            break

    residual = state.true_offset_um
    success = converged and residual < 0.2
    report = AlignmentReport(
        residual_offset_um=residual,
        final_gap_um=state.gap_um,
        n_spectra_acquired=n_spectra,
        trajectory=tuple(trajectory),
        success=success,
        iterations=iterations,
    )
    state = _log(
        state,
        "auto-align",
        {"success": success, "residual_offset_um": round(residual, 6),
         "n_spectra": n_spectra},
    )
    return state, report


def secure(state: RigState) -> RigState:
    """Screw the fiber holder to the chip holder.

    Applies a small random lateral perturbation (the mechanical act of
    tightening) and records a post-secure spectrum check in the log.
    """
    if state.phase != LANDED:
        raise PhaseError(f"secure requires phase 'landed', not {state.phase!r}")
    rng = _draw_rng(state)
    sigma = state.config.securing_sigma_um
    perturb = rng.normal(0.0, sigma, size=2) if sigma > 0 else np.zeros(2)
    fx, fy = state.fiber_position_um
    state = _log(
        state,
        "secured",
        {"perturbation_um": [float(perturb[0]), float(perturb[1])]},
        dt_s=30.0,
        draws=1,
        fiber_position_um=(fx + float(perturb[0]), fy + float(perturb[1])),
        phase=SECURED,
    )
    state, spectrum = acquire_spectrum(state)
    dips = find_mode_dips(
        spectrum, state.device.pillar, state.expected_mode_wavelengths_nm()
    )
    return _log(
        state,
        "post-secure-check",
        {"fundamental_contrast": round(dips[0].contrast, 4)},
    )


def run_cooldown(
    state: RigState, target_temp_k: float | None = None, n_steps: int = 30
) -> tuple[RigState, list[tuple[float, Spectrum]]]:
    """Cool from room temperature to base, monitoring the reflectivity.

    The gap interpolates linearly (in temperature progress) from the
    stamp design gap to the cold gap; the lateral offset is untouched,
    encoding the observed mechanical stability of the mount.
    """
    if state.phase != SECURED:
        raise PhaseError(f"cooldown requires phase 'secured', not {state.phase!r}")
    cfg = state.config
    target = cfg.base_temperature_k if target_temp_k is None else float(target_temp_k)
    if target < 2.4:
        raise InvalidConfigError("target temperature below 2.4 K base")
    if n_steps < 2:
        raise InvalidConfigError("cooldown needs at least 2 steps")

    temps = np.linspace(ROOM_TEMPERATURE_K, target, n_steps)
    series: list[tuple[float, Spectrum]] = []
    for t in temps:
        progress = (ROOM_TEMPERATURE_K - t) / (ROOM_TEMPERATURE_K - target)
        gap = cfg.stamp_design_gap_um + progress * (
            cfg.cold_gap_um - cfg.stamp_design_gap_um
        )
        state = replace(state, temperature_k=float(t), gap_um=float(gap))
        state = _log(state, "cooldown-step",
                     {"temperature_k": float(t), "gap_um": round(float(gap), 4)},
                     dt_s=COOLDOWN_STEP_SECONDS)
        state, spectrum = acquire_spectrum(state)
        series.append((float(t), spectrum))
    state = _log(state, "cold", {"temperature_k": target}, phase=COLD)
    return state, series


def warmup(state: RigState) -> RigState:
    """Return from base temperature to room temperature."""
    if state.phase != COLD:
        raise PhaseError(f"warmup requires phase 'cold', not {state.phase!r}")
    return _log(
        state,
        "warmed-up",
        {},
        dt_s=COOLDOWN_STEP_SECONDS * 10,
        phase=SECURED,
        temperature_k=ROOM_TEMPERATURE_K,
        gap_um=state.config.stamp_design_gap_um,
    )


def thermal_cycle(state: RigState, n_cycles: int) -> tuple[RigState, CycleReport]:
    """Run repeated warmup/cooldown cycles and report base-temperature
    mode wavelengths and contrasts per cycle."""
    if state.phase not in (SECURED, COLD):
        raise PhaseError(f"thermal cycling requires secured or cold, not {state.phase!r}")
    if n_cycles < 1:
        raise InvalidConfigError("need at least one cycle")

    wavelengths = []
    contrasts = []
    for _ in range(n_cycles):
        if state.phase == COLD:
            state = warmup(state)
        state, _series = run_cooldown(state, n_steps=6)
        jitter_rng = _draw_rng(state)
        jitter = float(jitter_rng.normal(0.0, state.config.cycle_jitter_nm))
        state = replace(state, n_draws=state.n_draws + 1)
        state, spectrum = acquire_spectrum(state, mode_wavelength_offset_nm=jitter)
        dips = find_mode_dips(
            spectrum, state.device.pillar, state.expected_mode_wavelengths_nm()
        )
        wavelengths.append(tuple(d.center_wavelength_nm for d in dips))
        contrasts.append(tuple(d.contrast for d in dips))
        state = _log(state, "cycle-complete",
                     {"wavelengths_nm": [round(w, 5) for w in wavelengths[-1]],
                      "contrasts": [round(c, 4) for c in contrasts[-1]]})

    fundamentals = np.array([w[0] for w in wavelengths])
    seconds = np.array([c[1] for c in contrasts]) if len(contrasts[0]) > 1 else np.array([0.0])
    std_defined = n_cycles > 1
    std = float(fundamentals.std(ddof=1)) if std_defined else 0.0
    report = CycleReport(
        mode_wavelengths_nm=tuple(wavelengths),
        mode_contrasts=tuple(contrasts),
        fundamental_wavelength_std_nm=std,
        second_mode_contrast_min=float(seconds.min()),
        second_mode_contrast_max=float(seconds.max()),
        n_cycles=n_cycles,
        std_defined=std_defined,
    )
    return state, report
