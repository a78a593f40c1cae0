"""Berry-phase magnetometry with a spin-1 in a 3D-rotating diamond."""

__version__ = "0.1.0"

from .adiabatic import AdiabaticityReport, epsilon_critical_closed_form, epsilon_profile
from .dynamics import (
    RamseyResult,
    adiabatic_fidelity,
    propagate,
    propagated_phase_difference,
    ramsey_phase,
    shot_noise_mc,
)
from .errors import *  # noqa: F401,F403
from .model import (
    HyperfineConstants,
    RotationParams,
    ScenarioConfig,
    SpinSpecies,
    default_scenario,
    derive_q_prime,
    omega_alpha_eff,
    preset,
    scenario_from_dict,
    validate_scenario,
)
from .phases import (
    BlochPoint,
    PhaseLedger,
    adiabatic_phases,
    berry_integrand_phase,
    bloch_trajectory,
    geometric_phase_shift,
    solid_angle,
)
from .rotoframe import (
    BodyFieldSample,
    ResonanceVerdict,
    critical_ratio,
    effective_field,
    resonance_condition,
    z_crossing_times,
)
from .sensing import (
    PhaseSlope,
    SensitivityPoint,
    optimize_parameters,
    phase_slope,
    rotation_noise_floor,
    sensitivity,
    sensitivity_sweep,
)
from .spinham import (
    BranchTrajectory,
    EigenFrame,
    HamiltonianSample,
    branch_trajectory,
    eigensystem,
    hamiltonian_at,
    spin_one,
    track_branches,
)
