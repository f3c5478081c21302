"""Free-space propagation of sampled fields by the angular spectrum method.

The field is decomposed into plane waves with a 2D FFT, each plane wave
is advanced by exp(i kz z) with kz = sqrt(k^2 - kx^2 - ky^2), and the
result is transformed back.  Evanescent components (kx^2 + ky^2 > k^2)
decay exponentially, which is the physical behavior and also what keeps
the inverse transform stable.  Propagating components acquire pure
phases, so total power is conserved to machine precision as long as the
field does not wrap around the periodic grid boundary.
"""

from __future__ import annotations

import numpy as np

from .errors import AliasingError
from .fields import ScalarField

# Maximum tolerated fraction of power in the outer grid ring after
# propagation; more than this and FFT periodicity has started folding
# the diffracted field back onto itself.
BOUNDARY_POWER_LIMIT = 1e-3


def _transfer_function(field: ScalarField, distance_um: float) -> np.ndarray:
    grid = field.grid
    lam_um = field.wavelength_nm * 1e-3
    k = 2.0 * np.pi / lam_um
    kx = 2.0 * np.pi * np.fft.fftfreq(grid.samples_x, grid.dx)
    ky = 2.0 * np.pi * np.fft.fftfreq(grid.samples_y, grid.dy)
    kxx, kyy = np.meshgrid(kx, ky, indexing="xy")
    kz_sq = k**2 - kxx**2 - kyy**2
    kz = np.sqrt(np.maximum(kz_sq, 0.0))
    kappa = np.sqrt(np.maximum(-kz_sq, 0.0))
    return np.exp(1j * kz * distance_um) * np.exp(-kappa * distance_um)


def propagate(field: ScalarField, distance_um: float, check_boundary: bool = True) -> ScalarField:
    """Propagate a field forward by ``distance_um`` in free space.

    distance 0 returns an identical field.  Raises AliasingError when
    more than 0.1% of the power reaches the grid boundary, which means
    the grid extent is too small for this propagation distance.
    """
    if distance_um < 0.0:
        raise ValueError("propagation distance must be >= 0")
    if distance_um == 0.0:
        return ScalarField(field.grid, field.amplitude.copy(), field.wavelength_nm)

    spectrum = np.fft.fft2(field.amplitude)
    out_amp = np.fft.ifft2(spectrum * _transfer_function(field, distance_um))
    out = ScalarField(field.grid, out_amp, field.wavelength_nm)

    if check_boundary:
        frac = out.boundary_power_fraction()
        if frac > BOUNDARY_POWER_LIMIT:
            raise AliasingError(
                f"{frac:.2%} of the power reached the grid boundary after "
                f"{distance_um:.2f} um; enlarge the grid extent"
            )
    return out
