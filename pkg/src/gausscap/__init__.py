"""Capacity lower bounds for lossy bosonic Gaussian channels.

Quantum water filling over diagonal covariance spectra: closed forms where
the whole spectrum is modulated, KKT stage iteration otherwise, with
memoryless one-use and asymptotic nearest-neighbor memory front ends.
"""

from .channel import (
    ChannelParams,
    EnvironmentSpectrum,
    QuadratureSpectrum,
    averaged_output_spectrum,
    energy_check,
    holevo_chi,
    mean_env_photons,
    memoryless_environment,
    nearest_neighbor_environment,
    output_spectrum,
    symplectic_spectrum,
)
from .entropy import ApproxOrder, g_derivative, g_entropy, g_photons, g_series
from .errors import (
    GausscapError,
    InfeasibleStart,
    NoConvergence,
    QuadratureFailure,
    StageViolation,
)
from .kkt import (
    KktSolution,
    Stage,
    StageAssignment,
    capacity_all_third,
    second_stage_residual,
    solve_dynamic,
    solve_second_stage_mode,
    solve_static,
    third_stage_closed_form,
    x_residual,
)
from .memory import (
    Distribution,
    SpectralSolution,
    bessel_i0,
    env_density,
    max_over_env,
    n2_threshold,
    solve_asymptotic,
    w_parameter,
)
from .memoryless import (
    OneUseSolution,
    critical_transmissivity,
    optimal_env_squeezing,
    r_opt_curve,
    second_stage_first_order,
    second_stage_zeroth,
    solve_one_use,
    third_stage_capacity,
)
from .oracle import OracleReport, maximize_chi

__version__ = "0.1.0"
