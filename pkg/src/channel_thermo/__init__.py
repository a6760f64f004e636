"""Capacity, mixing time and effective thermodynamics of discrete memoryless channels."""

from .capacity import (
    CapacityGradient,
    CapacityResult,
    blahut_arimoto,
    capacity,
    capacity_gradient,
    fd_capacity_gradient,
    good_channel_expansion_check,
    muroga_capacity,
)
from .core import (
    ChannelMatrix,
    Distribution,
    InfoMeasures,
    entropy,
    joint_distribution,
    mutual_information,
    output_distribution,
    relative_entropy,
    row_entropies,
    validate_channel,
)
from .landscape import (
    ChannelFamily,
    LandscapeGrid,
    argmin_report,
    biodmc,
    corner_basin_diagnostics,
    family_constrained,
    family_convex,
    near_argmin_psi_check,
    sweep,
)
from .mixing import (
    MixingResult,
    ReversibilizationParts,
    invariant_distribution,
    reversibilization,
    spectral_gap,
    time_reversal,
    variational_gap_samples,
)
from .thermo import DmcThermo, ThermoState, dmc_thermo, effective_state, factoring_work, inverse_state

__version__ = "0.1.0"
