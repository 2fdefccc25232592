"""Einstein-Dirac solutions on warped products M x R: evolution and certification."""

__version__ = "0.1.0"

from .errors import InadmissibleData, InvalidParams, MissingDerivative, OutOfDomain, WindowError
from .geometry import (
    GeometrySample,
    ModelParams,
    Parity,
    base_scalar_curvature,
    closed_form_f,
    closed_form_scalar,
    curvature,
    second_fundamental_form,
    warp_hypothesis_residuals,
)
from .evolution import (
    Cause,
    EvenState,
    OddState,
    Termination,
    Trajectory,
    charge_even,
    charge_odd,
    einstein_system,
    initial_state,
    initial_state_even,
    initial_state_odd,
    initial_state_wk,
    integrate,
    integrate_to_times,
    rhs_even,
    rhs_odd,
    rhs_wk_even,
    rhs_wk_odd,
    sigma_factor,
    wk_system,
)
from .constraints import (
    conserved_charge,
    einstein_residuals,
    energy_momentum,
    energy_momentum_even,
    energy_momentum_odd,
    hamiltonian_residual,
    momentum_lhs_residual,
    trajectory_residuals,
    verify_trajectory,
    wk_residual,
)
from .reparam import GlobalTrajectory, gamma, gamma_prime, pullback_lapse, pullback_trajectory
