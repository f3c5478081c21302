"""Exception hierarchy for the pigtailsim package."""


class PigtailSimError(Exception):
    """Base class for all package-specific errors."""


class GridTooCoarseError(PigtailSimError):
    """Grid sample spacing does not resolve the working wavelength (> lambda/4)."""


class GridTooSmallError(PigtailSimError):
    """Grid extent too small for the mode or propagation requested."""


class GridMismatchError(PigtailSimError):
    """Two fields live on different grids or wavelengths."""


class NoGuidedModeError(PigtailSimError):
    """Fiber V-number below the fundamental-mode cutoff; spec is unphysical."""


class UnknownModeOrderError(PigtailSimError):
    """Requested transverse mode order not supported by the pillar spec."""


class AliasingError(PigtailSimError):
    """Propagated power reached the grid boundary; result would be aliased."""


class OutOfBandError(PigtailSimError):
    """Requested wavelength range outside the supported band."""


class TooFewFringesError(PigtailSimError):
    """Spectrum does not contain enough interference structure to estimate a gap."""


class InsufficientScanError(PigtailSimError):
    """Lateral scan has too few points for a contrast profile."""


class NoInteriorMaximumError(PigtailSimError):
    """Contrast profile has no interior maximum; scan window missed the pillar."""


class PhaseError(PigtailSimError):
    """Operation not allowed in the rig's current phase."""


class MotionForbiddenError(PhaseError):
    """Stage motion forbidden in the current phase."""


class LandingFailureError(PigtailSimError):
    """Gap estimate diverged from the commanded height during landing."""


class InvalidConfigError(PigtailSimError):
    """Rig or source configuration violates an invariant."""


class EmptyChannelError(PigtailSimError):
    """Time-tag channel required for correlation is empty or missing."""


class InsufficientSidePeaksError(PigtailSimError):
    """Coincidence histogram spans too few repetition periods."""


class MissingFactorError(PigtailSimError):
    """Efficiency budget is missing a factor required by the calculation."""


class NonConvergenceError(PigtailSimError):
    """Iterative fit failed to converge."""


class TooFewSamplesError(PigtailSimError):
    """Time series too short for the requested statistics."""


class UnknownSessionError(PigtailSimError):
    """Service command addressed to a session that does not exist."""


class MalformedCommandError(PigtailSimError):
    """Service command envelope failed validation."""
