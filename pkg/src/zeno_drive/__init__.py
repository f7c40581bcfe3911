"""Heralded coherent-state preparation of a mechanical resonator by repeated
ground-state projections of a coupled flux qubit."""

from zeno_drive.errors import (
    ConfigError,
    CutoffTooSmallError,
    InvalidParameterError,
    ProtocolCannotConvergeError,
    ZenoDriveError,
)
from zeno_drive.fock import (
    CoherentSpec,
    DensityMatrix,
    FockCutoff,
    StateVector,
    ThermalSpec,
    choose_cutoff,
    coherent_state,
    displaced_thermal_density,
    displacement_matrix,
    mean_phonon,
    mean_phonon_from_temperature,
    thermal_density,
)
from zeno_drive.jc import (
    CompositeUnitary,
    ConditionalSpectrum,
    PhysicalParams,
    conditional_eigenvalue,
    conditional_spectrum,
    effective_unitary,
    jc_unitary,
    mixing_angle,
    rabi_frequency,
)
from zeno_drive.protocol import (
    HeraldStats,
    ProtocolConfig,
    Schedule,
    TrajectoryRecord,
    asymptotic_success,
    draw_schedule,
    effective_input,
    final_state,
    run_protocol,
    sample_heralded_run,
    thermal_like_contribution,
    thermal_overlap_series,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CutoffTooSmallError",
    "InvalidParameterError",
    "ProtocolCannotConvergeError",
    "ZenoDriveError",
    "CoherentSpec",
    "DensityMatrix",
    "FockCutoff",
    "StateVector",
    "ThermalSpec",
    "choose_cutoff",
    "coherent_state",
    "displaced_thermal_density",
    "displacement_matrix",
    "mean_phonon",
    "mean_phonon_from_temperature",
    "thermal_density",
    "CompositeUnitary",
    "ConditionalSpectrum",
    "PhysicalParams",
    "conditional_eigenvalue",
    "conditional_spectrum",
    "effective_unitary",
    "jc_unitary",
    "mixing_angle",
    "rabi_frequency",
    "HeraldStats",
    "ProtocolConfig",
    "Schedule",
    "TrajectoryRecord",
    "asymptotic_success",
    "draw_schedule",
    "effective_input",
    "final_state",
    "run_protocol",
    "sample_heralded_run",
    "thermal_like_contribution",
    "thermal_overlap_series",
]
