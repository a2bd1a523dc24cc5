"""Front speeds for the spatially periodic Fisher-KPP equation.

Computes the minimal traveling-wave speed by the principal-eigenvalue,
variational, and direct-simulation routes, builds the speed-minimizing
growth coefficient for a given diffusion profile, and checks the equality
condition that pins the speed to 2*sqrt(harm(d)*mean(r)).
"""

__version__ = "0.1.0"

from .coeffs import (
    ConstraintSet,
    MeanSummary,
    PeriodicCoefficient,
    from_samples,
    means,
    parse_coefficient,
    rescale_period,
)
from .eigen import (
    EigenPair,
    OperatorMatrix,
    VariationalResult,
    assemble_operator,
    euler_lagrange_residual,
    principal_eigenpair,
    variational_value,
)
from .errors import CoefficientError, NumericalError, PreconditionError
from .optimal import (
    ConstancyResult,
    PerturbationStudy,
    PeriodScan,
    constancy_test,
    optimal_growth,
    period_scan,
    perturbation_study,
    scale_invariance_check,
)
from .pde import (
    FrontTrajectory,
    InitialBump,
    SimulationConfig,
    SimulationRun,
    SpreadingSpeedEstimate,
    StationaryState,
    simulate,
    spreading_speed_estimate,
    stationary_state,
    write_snapshots,
)
from .speed import (
    EqualityReport,
    SpeedResult,
    condition_residual,
    equality_report,
    lower_bound,
    minimal_speed,
)

__all__ = [
    "__version__",
    "CoefficientError",
    "NumericalError",
    "PreconditionError",
    "PeriodicCoefficient",
    "MeanSummary",
    "ConstraintSet",
    "parse_coefficient",
    "from_samples",
    "means",
    "rescale_period",
    "OperatorMatrix",
    "EigenPair",
    "VariationalResult",
    "assemble_operator",
    "principal_eigenpair",
    "variational_value",
    "euler_lagrange_residual",
    "SpeedResult",
    "EqualityReport",
    "minimal_speed",
    "lower_bound",
    "condition_residual",
    "equality_report",
    "ConstancyResult",
    "PerturbationStudy",
    "PeriodScan",
    "optimal_growth",
    "scale_invariance_check",
    "perturbation_study",
    "constancy_test",
    "period_scan",
    "StationaryState",
    "SimulationConfig",
    "InitialBump",
    "SimulationRun",
    "FrontTrajectory",
    "SpreadingSpeedEstimate",
    "stationary_state",
    "simulate",
    "spreading_speed_estimate",
    "write_snapshots",
]
