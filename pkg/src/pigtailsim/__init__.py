"""Digital twin of a fiber-pigtailed micropillar single-photon source.

Subsystems:

- fields / modes / propagation / coupling: scalar optics engine for
  micropillar-to-fiber mode matching across an air gap.
- spectra: reflectivity spectrum synthesis and the alignment estimators
  (gap from fringe spacing, mode-dip contrast, lateral center).
- rig: the stateful virtual pigtailing workstation and its automated
  alignment, cooldown and thermal-cycling procedures.
- photons: pulsed single-photon stream simulation and the g2 / HOM /
  saturation / stability estimators.
- budget: the multiplicative efficiency chain and its inversion.
- service / cli: session-oriented HTTP+WebSocket service and the
  command-line surface.
"""

from .budget import EfficiencyBudget, Measured, compare_to_simulation, infer_coupling, predict_brightness
from .coupling import (
    CouplingMap,
    CouplingModel,
    CouplingQuery,
    coupling_efficiency,
    coupling_map,
    overlap,
)
from .fields import Grid2D, ScalarField, gaussian_field
from .modes import (
    DeviceSpec,
    FiberSpec,
    PillarSpec,
    make_fiber_mode,
    make_pillar_mode,
)
from .photons import (
    CoincidenceHistogram,
    DetectorModel,
    SourceParams,
    TimeTags,
    fit_saturation,
    g2_zero,
    histogram_coincidences,
    hom_visibility,
    indistinguishability,
    simulate_stream,
    stability_stats,
)
from .propagation import propagate
from .rig import (
    AlignmentReport,
    CycleReport,
    RigConfig,
    RigState,
    acquire_spectrum,
    auto_align,
    move_stage,
    new_session,
    run_cooldown,
    secure,
    thermal_cycle,
    vertical_landing,
)
from .spectra import (
    ContrastProfile,
    DipFeature,
    FringePair,
    Spectrum,
    contrast_profile,
    estimate_center,
    estimate_gap,
    find_mode_dips,
    synth_reflectivity,
)

__all__ = [
    "AlignmentReport",
    "CoincidenceHistogram",
    "ContrastProfile",
    "CouplingMap",
    "CouplingModel",
    "CouplingQuery",
    "CycleReport",
    "DetectorModel",
    "DeviceSpec",
    "DipFeature",
    "EfficiencyBudget",
    "FiberSpec",
    "FringePair",
    "Grid2D",
    "Measured",
    "PillarSpec",
    "RigConfig",
    "RigState",
    "ScalarField",
    "SourceParams",
    "Spectrum",
    "TimeTags",
    "acquire_spectrum",
    "auto_align",
    "compare_to_simulation",
    "contrast_profile",
    "coupling_efficiency",
    "coupling_map",
    "estimate_center",
    "estimate_gap",
    "find_mode_dips",
    "fit_saturation",
    "g2_zero",
    "gaussian_field",
    "histogram_coincidences",
    "hom_visibility",
    "indistinguishability",
    "infer_coupling",
    "make_fiber_mode",
    "make_pillar_mode",
    "move_stage",
    "new_session",
    "overlap",
    "predict_brightness",
    "propagate",
    "run_cooldown",
    "secure",
    "simulate_stream",
    "stability_stats",
    "synth_reflectivity",
    "thermal_cycle",
    "vertical_landing",
]

__version__ = "0.1.0"
