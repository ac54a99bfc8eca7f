"""Weak-measurement qubit walks, their drift-diffusion limits, and ratchets."""

from ._kernels import BACKEND
from .measurement import (
    BasisStateError,
    Chart,
    MeasurementParams,
    SaturationWarning,
    SingularMeasurementError,
    StateCoordinate,
    amplitude_matrix,
    diffusion_step,
    kraus_pair,
    mean_step,
    mean_step_components,
    outcome_probabilities,
    pi_of_x,
    post_measurement_state,
    step_size_at_x,
    step_sizes,
    theta_of_x,
    x_of_pi,
    x_of_theta,
)
from .schedules import ProfileSpec, Schedule, pi_localization_schedule, uniform_schedule
from .trajectories import (
    X_MAX,
    EnsembleStats,
    TrajectoryRecord,
    empirical_pi_mean,
    run_ensemble,
    run_localization_ensemble,
    run_trajectory,
)
from .master import (
    PdfGrid,
    PushOperator,
    conservation_audit,
    evolve,
    grid_from_point,
    pi_average,
    propagate_conditional,
    propagate_const,
)
from .fokker_planck import (
    Field,
    FpCoefficients,
    change_coordinates,
    coefficients_pi,
    coefficients_theta,
    coefficients_x,
    drift_velocity,
    point_source_density,
    potential,
    solve,
)
from .profiles import (
    StrengthProfile,
    build_state_X,
    localization_profile,
    onoff_sawtooth_profile,
    rescale_equivalence,
    sign_sawtooth_profile,
    static_sine_profile,
)
from .ratchet import (
    CurrentRecord,
    asymptotic_coefficients,
    moving_average,
    seebeck_steady_current,
    solve_reduced,
)

__version__ = "0.1.0"
