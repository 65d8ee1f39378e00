"""Exponential Runge-Kutta toolkit for stiff ODEs."""

from .errors import (
    ConfigurationError,
    DegenerateReferenceError,
    DomainError,
    ExpRKError,
    NonFiniteResultError,
    OracleFailureError,
    PoleError,
    ShapeError,
    StepFailureError,
    UnboundedIntervalError,
    UnsupportedOrderError,
)
from .harness import SweepConfig, SweepRecord, emit_csv, emit_raster, read_csv, relative_error, run_sweep
from .integrators import (
    GeneralProblem,
    PrecomputedPropagators,
    SemilinearProblem,
    Trajectory,
    finite_difference_jacobian,
    integrate,
    step_etd_euler,
    step_exprk2,
    step_rb2,
    step_rk2,
    step_rk4,
)
from .matfun import (
    PhiStrategy,
    PhiTable,
    arnoldi,
    expm_action,
    expm_dense,
    krylov_exp_action,
    phi_dense,
    phi_scalar,
    phipm_action,
)
from .problems import ProblemSpec, cm1d, duffing, duffing_energy, get_problem, reference_solution, toy_model
from .stability import StabilityRaster, rasterize, real_axis_boundary, stability_function

__version__ = "0.1.0"
