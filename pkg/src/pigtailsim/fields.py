"""Transverse grids and sampled complex optical fields.

All transverse lengths are in micrometers, wavelengths in nanometers.
A ScalarField is the carrier of every mode and propagation computation:
a complex amplitude sampled on a regular 2D grid, with enough metadata
to check that two fields are commensurable before combining them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridMismatchError, GridTooCoarseError, GridTooSmallError

NM_PER_UM = 1e3


@dataclass(frozen=True)
class Grid2D:
    """Regular transverse sampling grid, centered on the optical axis.

    Coordinates follow FFT conventions: sample k sits at
    ``(k - n//2) * spacing``, so the axis origin is always a sample point.

    Parameters
    ----------
    extent_x, extent_y : float
        Physical side lengths [um].
    samples_x, samples_y : int
        Number of samples along each axis.
    """

    extent_x: float = 12.0
    extent_y: float = 12.0
    samples_x: int = 512
    samples_y: int = 512

    def __post_init__(self):
        if self.extent_x <= 0 or self.extent_y <= 0:
            raise GridTooSmallError("grid extent must be positive")
        if self.samples_x < 8 or self.samples_y < 8:
            raise GridTooCoarseError("grid needs at least 8 samples per axis")

    @property
    def dx(self) -> float:
        return self.extent_x / self.samples_x

    @property
    def dy(self) -> float:
        return self.extent_y / self.samples_y

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @cached_property
    def x(self) -> np.ndarray:
        return (np.arange(self.samples_x) - self.samples_x // 2) * self.dx

    @cached_property
    def y(self) -> np.ndarray:
        return (np.arange(self.samples_y) - self.samples_y // 2) * self.dy

    @cached_property
    def xx(self) -> np.ndarray:
        return np.meshgrid(self.x, self.y, indexing="xy")[0]

    @cached_property
    def yy(self) -> np.ndarray:
        return np.meshgrid(self.x, self.y, indexing="xy")[1]

    @cached_property
    def rr(self) -> np.ndarray:
        """Radial distance from the grid center [um]."""
        return np.hypot(self.xx, self.yy)

    def radius_from(self, x0: float, y0: float) -> np.ndarray:
        return np.hypot(self.xx - x0, self.yy - y0)

    def check_resolves(self, wavelength_nm: float) -> None:
        """Raise if the spacing does not resolve wavelength/4."""
        limit = wavelength_nm / NM_PER_UM / 4.0
        if self.dx > limit or self.dy > limit:
            raise GridTooCoarseError(
                f"grid spacing ({max(self.dx, self.dy):.4f} um) exceeds "
                f"lambda/4 = {limit:.4f} um at {wavelength_nm:.1f} nm"
            )

    def check_contains_waist(self, waist_um: float) -> None:
        """Raise unless the extent is at least 6x the given mode waist."""
        need = 6.0 * waist_um
        if self.extent_x < need or self.extent_y < need:
            raise GridTooSmallError(
                f"grid extent {min(self.extent_x, self.extent_y):.1f} um "
                f"< 6 x mode waist ({need:.1f} um)"
            )


@dataclass
class ScalarField:
    """Complex optical amplitude sampled on a :class:`Grid2D`.

    The amplitude carries units of sqrt(power)/um so that total power is
    ``sum(|E|^2) * cell_area``.
    """

    grid: Grid2D
    amplitude: np.ndarray
    wavelength_nm: float

    def __post_init__(self):
        amp = np.asarray(self.amplitude)
        if amp.shape != (self.grid.samples_y, self.grid.samples_x):
            raise GridMismatchError(
                f"amplitude shape {amp.shape} does not match grid "
                f"({self.grid.samples_y}, {self.grid.samples_x})"
            )
        if not np.all(np.isfinite(amp)):
            raise ValueError("field amplitude contains non-finite values")
        self.amplitude = amp.astype(np.complex128, copy=False)

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.amplitude) ** 2) * self.grid.cell_area)

    def normalized(self) -> "ScalarField":
        """Return a copy scaled to unit total power."""
        p = self.power
        if p <= 0.0:
            raise ValueError("cannot normalize a zero-power field")
        return ScalarField(self.grid, self.amplitude / np.sqrt(p), self.wavelength_nm)

    def mode_field_radius(self) -> float:
        """Second-moment (1/e field) radius [um].

        Defined as sqrt(2 <r^2>) with the intensity-weighted mean square
        radius about the grid center; equals the waist exactly for a
        centered Gaussian.
        """
        inten = np.abs(self.amplitude) ** 2
        total = inten.sum()
        if total <= 0.0:
            raise ValueError("zero-power field has no mode radius")
        msq = float((inten * self.grid.rr**2).sum() / total)
        return float(np.sqrt(2.0 * msq))

    def boundary_power_fraction(self, margin_cells: int = 4) -> float:
        """Fraction of total power in the outermost ring of the grid."""
        inten = np.abs(self.amplitude) ** 2
        total = inten.sum()
        if total <= 0.0:
            return 0.0
        m = margin_cells
        inner = inten[m:-m, m:-m].sum()
        return float((total - inner) / total)


def same_frame(a: ScalarField, b: ScalarField) -> None:
    """Raise GridMismatchError unless a and b share grid and wavelength."""
    if a.grid != b.grid:
        raise GridMismatchError("fields live on different grids")
    if abs(a.wavelength_nm - b.wavelength_nm) > 1e-9:
        raise GridMismatchError(
            f"fields have different wavelengths "
            f"({a.wavelength_nm} nm vs {b.wavelength_nm} nm)"
        )


def gaussian_field(
    grid: Grid2D,
    waist_um: float,
    wavelength_nm: float,
    x0: float = 0.0,
    y0: float = 0.0,
) -> ScalarField:
    """Normalized fundamental Gaussian with 1/e field radius ``waist_um``."""
    r2 = (grid.xx - x0) ** 2 + (grid.yy - y0) ** 2
    amp = np.exp(-r2 / waist_um**2)
    f = ScalarField(grid, amp, wavelength_nm)
    return f.normalized()
