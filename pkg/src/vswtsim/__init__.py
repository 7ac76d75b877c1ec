"""Variable-speed wind turbine (Type 3/4) simulation toolkit.

Static characteristic curves (Cp-lambda, Cp-wind, Pmech-omega families),
optimum operating-point search, and closed-loop time-domain simulation with
one-mass and two-mass drivetrain models, pitch control with anti-windup, and
the converter power channel.  A compiled stepping kernel is used when
available; a pure-Python fallback keeps everything functional without it.
"""

from .params import (
    ConfigError,
    CpCoefficients,
    Scenario,
    TurbineParams,
    load_config,
    load_params,
    serialize_params,
    validate,
    validate_scenario,
    with_overrides,
)
from .aero import aero_power, mechanical_power, power_coefficient, tip_speed_ratio
from .controls import PiController, PitchSubsystem, SpeedController, omega_ref
from .electrical import PowerChannel
from .drivetrain import (
    OneMassState,
    TwoMassState,
    one_mass_deriv,
    shaft_torque,
    two_mass_deriv,
)
from .engine import (
    BACKEND,
    EngineNumericsError,
    FullState,
    InitConvergenceError,
    Trajectory,
    available_backends,
    init_steady_state,
    rk4_step,
    simulate,
    step,
    wind_at,
)
from .curves import (
    CurveTable,
    calibrate_k_tsr,
    find_optimum,
    sweep_cp_vs_lambda,
    sweep_cp_vs_wind,
    sweep_pmech_vs_omega,
)

__version__ = "0.1.0"
