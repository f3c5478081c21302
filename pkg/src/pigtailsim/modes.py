"""Fiber and micropillar transverse mode construction.

The fiber fundamental mode is the exact LP01 solution of the step-index
dispersion relation (Bessel J inside the core, K outside); a Gaussian
with the Marcuse-equivalent waist is available as a fallback behind the
same interface.

The micropillar fundamental mode is modeled as the strongly-confined
Bessel mode of the pillar cross-section: J0(u rho'/rho) inside an
effective mode radius rho and zero outside, where the confinement
parameter ``u`` is the single calibrated model constant (u -> 2.405 is
the infinite-index-contrast waveguide limit).  The effective mode radius
saturates with the physical radius, rho(R) = Ra (R/Ra)^s, anchored at
the reference device radius Ra = 1.4 um with exponent s = 0.65 taken
from the slope of the Gaussian-waist approximation for strongly guided
waveguides; this saturation is what reproduces the published flatness of
coupling versus diameter around the optimum.  Higher-order modes follow
the same construction with J1 and an azimuthal cosine (two-lobed,
antisymmetric).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import j0, j1, jn_zeros, k0, k1

from .errors import NoGuidedModeError, UnknownModeOrderError
from .fields import Grid2D, ScalarField

# Band over which the scalar mode models are considered valid [nm].
WAVELENGTH_BAND_NM = (850.0, 1000.0)

# First zeros of J0 and J1: confinement limits for the two mode families.
_J0_ZERO = float(jn_zeros(0, 1)[0])  # 2.404826
_J1_ZERO = float(jn_zeros(1, 1)[0])  # 3.831706

# Pillar-mode confinement parameter calibrated against the published
# coupling efficiencies (optimal-diameter coupling 96% at 0.23 um gap,
# 93.8% at 1 um, 89.9% at 2 um; 71% at diameter 2.8 um, gap 3.5 um).
# See coupling.calibrate_confinement, which reproduces this value.
DEFAULT_CONFINEMENT = 2.204

# Effective-mode-radius saturation law: rho(R) = Ra * (R/Ra)^s.  The
# anchor Ra is the radius of the reference 2.8 um device; the exponent
# is the local logarithmic slope of the Marcuse waist of a strongly
# guided waveguide (d ln w / d ln R ~ 0.65 around V ~ 4).
MODE_RADIUS_ANCHOR_UM = 1.4
MODE_RADIUS_EXPONENT = 0.65

SYMMETRIC = "symmetric"
ANTISYMMETRIC = "antisymmetric"


def effective_mode_radius(pillar_radius_um: float) -> float:
    """Effective transverse mode radius of a pillar of given radius [um]."""
    return MODE_RADIUS_ANCHOR_UM * (pillar_radius_um / MODE_RADIUS_ANCHOR_UM) ** MODE_RADIUS_EXPONENT


@dataclass(frozen=True)
class FiberSpec:
    """Step-index single-mode fiber described by NA and core diameter."""

    numerical_aperture: float = 0.35
    core_diameter_um: float = 1.8
    name: str = "UHNA3"

    def __post_init__(self):
        if not 0.0 < self.numerical_aperture < 1.0:
            raise ValueError("numerical aperture must be in (0, 1)")
        if self.core_diameter_um <= 0.0:
            raise ValueError("core diameter must be positive")

    def v_number(self, wavelength_nm: float) -> float:
        """Normalized frequency V = 2 pi a NA / lambda."""
        lam_um = wavelength_nm * 1e-3
        return 2.0 * np.pi * (self.core_diameter_um / 2.0) * self.numerical_aperture / lam_um

    def marcuse_waist(self, wavelength_nm: float) -> float:
        """Gaussian-equivalent mode field radius [um], Marcuse approximation.

        w/a = 0.65 + 1.619 V^-1.5 + 2.879 V^-6.
        """
        v = self.v_number(wavelength_nm)
        a = self.core_diameter_um / 2.0
        return a * (0.65 + 1.619 / v**1.5 + 2.879 / v**6)


@dataclass(frozen=True)
class PillarSpec:
    """Micropillar cavity device parameters.

    mode_wavelengths_nm lists the transverse-mode resonances in mode
    order (fundamental first) and must be strictly decreasing; parities
    alternate symmetric / antisymmetric starting from the symmetric
    fundamental.
    """

    diameter_um: float = 2.8
    fundamental_wavelength_nm: float = 945.8
    quality_factor: float = 13000.0
    purcell_factor: float = 13.0
    decay_time_ps: float = 80.0
    n_transverse_modes: int = 2
    mode_wavelengths_nm: tuple = (945.8, 943.0)
    mode_parities: tuple = (SYMMETRIC, ANTISYMMETRIC)

    def __post_init__(self):
        if self.quality_factor <= 0.0:
            raise ValueError("quality factor must be positive")
        if len(self.mode_wavelengths_nm) != self.n_transverse_modes:
            raise ValueError("mode_wavelengths_nm length must equal n_transverse_modes")
        if len(self.mode_parities) != self.n_transverse_modes:
            raise ValueError("mode_parities length must equal n_transverse_modes")
        diffs = np.diff(self.mode_wavelengths_nm)
        if self.n_transverse_modes > 1 and not np.all(diffs < 0.0):
            raise ValueError("mode wavelengths must be strictly decreasing with order")
        if abs(self.mode_wavelengths_nm[0] - self.fundamental_wavelength_nm) > 1e-9:
            raise ValueError("first mode wavelength must equal the fundamental wavelength")

    @property
    def radius_um(self) -> float:
        return self.diameter_um / 2.0

    def linewidth_nm(self, order: int = 0) -> float:
        return self.mode_wavelengths_nm[order] / self.quality_factor


@dataclass(frozen=True)
class DeviceSpec:
    """A pillar plus the fiber it is being pigtailed to."""

    pillar: PillarSpec = field(default_factory=PillarSpec)
    fiber: FiberSpec = field(default_factory=FiberSpec)


def _check_band(wavelength_nm: float) -> None:
    lo, hi = WAVELENGTH_BAND_NM
    if not lo <= wavelength_nm <= hi:
        raise ValueError(
            f"wavelength {wavelength_nm:.1f} nm outside the validity window "
            f"[{lo:.0f}, {hi:.0f}] nm"
        )


def lp01_parameters(fiber: FiberSpec, wavelength_nm: float) -> tuple[float, float, float]:
    """Solve the LP01 step-index dispersion relation.

    Returns (u, w, V) with u the transverse core parameter and w the
    cladding decay parameter, u^2 + w^2 = V^2.
    """
    v = fiber.v_number(wavelength_nm)
    # LP01 has no cutoff in an ideal step-index fiber, but below V ~ 0.3
    # the mode is so poorly confined that the numerics (and the physics)
    # stop being meaningful.
    if v < 0.3:
        raise NoGuidedModeError(
            f"V = {v:.3f} too small to support a usefully guided LP01 mode"
        )

    def dispersion(u: float) -> float:
        w = np.sqrt(v**2 - u**2)
        return u * j1(u) / j0(u) - w * k1(w) / k0(w)

    hi = min(v, _J0_ZERO) - 1e-9
    us = np.linspace(1e-6, hi, 400)
    vals = np.array([dispersion(u) for u in us])
    root = None
    for i in range(len(us) - 1):
        a, b = vals[i], vals[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b < 0.0:
            root = brentq(dispersion, us[i], us[i + 1])
            break
    if root is None:
        raise NoGuidedModeError("LP01 dispersion relation has no root; bad fiber spec")
    u = float(root)
    w = float(np.sqrt(v**2 - u**2))
    return u, w, v


def lp01_profile(
    fiber: FiberSpec, wavelength_nm: float, r_um: np.ndarray
) -> np.ndarray:
    """Unnormalized LP01 radial field profile evaluated at radii r [um]."""
    u, w, _ = lp01_parameters(fiber, wavelength_nm)
    a = fiber.core_diameter_um / 2.0
    r = np.asarray(r_um, dtype=float)
    arg = np.clip(w * r / a, 1e-12, 700.0)
    return np.where(r <= a, j0(u * r / a) / j0(u), k0(arg) / k0(w))


def make_fiber_mode(
    fiber: FiberSpec,
    grid: Grid2D,
    wavelength_nm: float,
    center: tuple[float, float] = (0.0, 0.0),
    model: str = "lp01",
) -> ScalarField:
    """Normalized fundamental fiber mode on the given grid.

    Parameters
    ----------
    fiber : FiberSpec
    grid : Grid2D
        Must resolve lambda/4 and extend to at least 6 mode waists.
    wavelength_nm : float
        Within the 850-1000 nm validity window.
    center : (float, float)
        Lateral position of the mode axis [um]; the default is on axis.
    model : {"lp01", "gaussian"}
        Exact Bessel LP01 solution, or the Marcuse-waist Gaussian fallback.
    """
    _check_band(wavelength_nm)
    grid.check_resolves(wavelength_nm)
    if fiber.v_number(wavelength_nm) < 0.3:
        raise NoGuidedModeError(
            f"V = {fiber.v_number(wavelength_nm):.3f} too small to support "
            "a usefully guided LP01 mode"
        )
    waist = fiber.marcuse_waist(wavelength_nm)
    grid.check_contains_waist(waist)

    x0, y0 = center
    r = grid.radius_from(x0, y0)
    if model == "lp01":
        amp = lp01_profile(fiber, wavelength_nm, r)
    elif model == "gaussian":
        amp = np.exp(-(r**2) / waist**2)
    else:
        raise ValueError(f"unknown fiber mode model {model!r}")
    return ScalarField(grid, amp, wavelength_nm).normalized()


def pillar_mode_profile(
    order: int, radius_um: float, confinement: float, xx: np.ndarray, yy: np.ndarray
) -> np.ndarray:
    """Unnormalized pillar mode amplitude on coordinate arrays [um].

    Order 0 is J0(u r/rho) inside the effective mode radius rho; order 1
    is the two-lobed J1(u1 r/rho) cos(phi) mode with lobes along x,
    where u1 keeps the same fractional confinement relative to the J1
    cutoff.
    """
    rho = effective_mode_radius(radius_um)
    r = np.hypot(xx, yy)
    inside = r <= rho
    if order == 0:
        return np.where(inside, j0(confinement * r / rho), 0.0)
    if order == 1:
        u1 = confinement * _J1_ZERO / _J0_ZERO
        with np.errstate(invalid="ignore", divide="ignore"):
            cos_phi = np.where(r > 0.0, xx / np.where(r > 0.0, r, 1.0), 0.0)
        return np.where(inside, j1(u1 * r / rho) * cos_phi, 0.0)
    raise UnknownModeOrderError(f"no profile defined for mode order {order}")


def make_pillar_mode(
    pillar: PillarSpec,
    order: int,
    grid: Grid2D,
    confinement: float = DEFAULT_CONFINEMENT,
    center: tuple[float, float] = (0.0, 0.0),
) -> ScalarField:
    """Normalized pillar transverse mode of the given order.

    Raises UnknownModeOrderError when order is outside
    [0, pillar.n_transverse_modes).
    """
    if not 0 <= order < pillar.n_transverse_modes:
        raise UnknownModeOrderError(
            f"order {order} outside [0, {pillar.n_transverse_modes})"
        )
    wavelength_nm = pillar.mode_wavelengths_nm[order]
    _check_band(wavelength_nm)
    grid.check_resolves(wavelength_nm)
    grid.check_contains_waist(pillar_gaussian_waist(pillar, confinement))

    x0, y0 = center
    amp = pillar_mode_profile(
        order, pillar.radius_um, confinement, grid.xx - x0, grid.yy - y0
    )
    return ScalarField(grid, amp, wavelength_nm).normalized()


def pillar_waist_ratio(confinement: float = DEFAULT_CONFINEMENT) -> float:
    """Gaussian-equivalent waist of the fundamental pillar mode as a
    fraction of its effective mode radius (the alpha in w = alpha rho).

    Uses the second-moment radius of the confined Bessel profile, which
    equals the 1/e field radius for a Gaussian and is scale-invariant.
    """
    x = np.linspace(0.0, 1.0, 2001)
    f2 = j0(confinement * x) ** 2 * x
    msq = np.trapezoid(f2 * x**2, x) / np.trapezoid(f2, x)
    return float(np.sqrt(2.0 * msq))


def pillar_gaussian_waist(
    pillar: PillarSpec, confinement: float = DEFAULT_CONFINEMENT
) -> float:
    """Gaussian-equivalent waist [um] of a pillar's fundamental mode."""
    return pillar_waist_ratio(confinement) * effective_mode_radius(pillar.radius_um)
