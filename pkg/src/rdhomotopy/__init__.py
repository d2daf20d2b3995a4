"""Positive stationary solutions of a discretized reaction-diffusion problem
with nonlinear Neumann flux, computed by homotopy continuation in the flux
parameter."""

from rdhomotopy.nonlinearity import (
    DerivedFunctions,
    NonlinearitySpec,
    ValidationReport,
    derive,
    make_custom,
    make_power_law,
    validate,
)
from rdhomotopy.shooting import (
    EnergyReport,
    Mesh,
    MonotonicityReport,
    ShootingState,
    boundary_residual,
    energy_report,
    monotonicity_probe,
    oracle_solve,
    shoot,
)
from rdhomotopy.system import (
    IdentityReport,
    Residual,
    TridiagonalMatrix,
    inverse_factorization_check,
    jacobian,
    minor_identity_check,
    positive_definite_check,
    residual,
    solve_tridiagonal,
)
from rdhomotopy.bounds import BoundsReport, HomotopyPlan, bounds_at, make_plan, mesh_gate
from rdhomotopy.homotopy import ConditionReport, condition_probe, newton_step, solve
from rdhomotopy.solution import Solution
from rdhomotopy.errors import (
    BoundsError,
    InverseError,
    MeshGateError,
    OracleError,
    RdhError,
    ShootingOverflow,
    SingularPivot,
    SolverDivergence,
)

__version__ = "0.1.0"
