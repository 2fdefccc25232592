"""Energy-momentum tensors and constraint/Einstein residuals for the reduced model.

Residuals are evaluated from closed-form geometry and the reduced
energy-momentum components. Whenever f_tt is needed it comes from the
right-hand side of the matching evolution system at the same state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import InvalidParams
from .evolution import (
    EvenState,
    OddState,
    State,
    Trajectory,
    _even_amplitudes,
    _even_ftt,
    _herm,
    _odd_amplitudes,
    _odd_ftt,
    _wk_even_amplitude,
    _wk_odd_amplitudes,
    charge_even,
    charge_odd,
    integrate,
    initial_state_wk,
    wk_system,
)
from .geometry import (
    GeometrySample,
    ModelParams,
    base_scalar_curvature,
    curvature,
    exp,
    second_fundamental_form,
    warp_hypothesis_residuals,
)

__all__ = [
    "EnergyMomentumReduced",
    "EinsteinResiduals",
    "ResidualReport",
    "energy_momentum_even",
    "energy_momentum_odd",
    "energy_momentum",
    "f_tt_from_rhs",
    "hamiltonian_residual",
    "momentum_lhs_residual",
    "einstein_residuals",
    "wk_residual",
    "trajectory_residuals",
    "conserved_charge",
    "wk_amplitude_deviation",
    "verify_trajectory",
]


class EnergyMomentumReduced(NamedTuple):
    tr_T: float
    T_tan_coeff: float  # T(V, W) = T_tan_coeff * eta(V, W)
    T_FF: float


class EinsteinResiduals(NamedTuple):
    tan: float
    normal: float


def energy_momentum_even(state: EvenState, params: ModelParams) -> EnergyMomentumReduced:
    """Reduced energy-momentum tensor for psi = h+ psi+ + h- psi-.

    Uses the symmetric split (psi+, psi+) = (psi-, psi-) = P / 2.
    """
    if not params.is_even:
        raise InvalidParams("energy_momentum_even needs even parity")
    eps, P = params.epsilon, params.P
    cross = (state.h_plus * state.h_minus.conjugate()).real * P
    mean_sq = 0.5 * (_herm(state.h_plus) + _herm(state.h_minus)) * P
    tr_T = 0.5 * eps * params.lambda_Q * mean_sq
    T_tan = eps * params.lambda_M / (4.0 * params.m) * exp(0.5 * state.f) * cross
    T_FF = -0.5 * eps * params.lambda_M * exp(-0.5 * state.f) * cross + tr_T
    return EnergyMomentumReduced(tr_T, T_tan, T_FF)


def energy_momentum_odd(state: OddState, params: ModelParams) -> EnergyMomentumReduced:
    """Reduced energy-momentum tensor for phi = h+ phi+ + k+ E . phi+."""
    if params.is_even:
        raise InvalidParams("energy_momentum_odd needs odd parity")
    eps, P = params.epsilon, params.P
    h, k = state.h_plus, state.k_plus
    cross = (h * k.conjugate()).real * P
    tr_T = 0.5 * eps * params.lambda_Q * (_herm(h) + _herm(k)) * P
    T_tan = eps * params.lambda_M / (2 * params.m - 1) * exp(0.5 * state.f) * cross
    T_FF = -eps * params.lambda_M * exp(-0.5 * state.f) * cross + tr_T
    return EnergyMomentumReduced(tr_T, T_tan, T_FF)


def energy_momentum(state: State, params: ModelParams) -> EnergyMomentumReduced:
    if params.is_even:
        return energy_momentum_even(state, params)
    return energy_momentum_odd(state, params)


def f_tt_from_rhs(state: State, params: ModelParams):
    """Second derivative of f prescribed by the Einstein system at ``state``."""
    if params.is_even:
        return _even_ftt(state.f, state.f_t, state.h_plus, state.h_minus, params)
    return _odd_ftt(state.f, state.f_t, state.h_plus, state.k_plus, params)


def hamiltonian_residual(state: State, params: ModelParams):
    """``-S_slice + (Tr II)^2 - Tr(II^2) - 2 T(F, F)``; zero on constrained data."""
    sff = second_fundamental_form(GeometrySample(state.f, state.f_t), params)
    slice_scalar = exp(-state.f) * base_scalar_curvature(params)
    T = energy_momentum(state, params)
    return -slice_scalar + sff.tr_ii**2 - sff.tr_ii_sq - 2.0 * T.T_FF


def momentum_lhs_residual(state: State, params: ModelParams, slice_gradient=None) -> float:
    """Geometric side ``d(Tr II)(V) - div(II)(V)`` of the momentum constraint.

    For ``II = phi * g_slice`` this equals ``(n - 1) d phi``. The reduced model
    has phi depending on t only, so with no ``slice_gradient`` the result is 0.
    Passing the slice components of ``d phi`` returns the norm of the general
    expression.
    """
    if slice_gradient is None:
        return 0.0
    grad = np.asarray(slice_gradient, dtype=float)
    return float((params.n - 1) * np.linalg.norm(grad))


def einstein_residuals(state: State, params: ModelParams, f_tt=None) -> EinsteinResiduals:
    """Tangential and normal parts of ``Ric - S/2 g - T``.

    ``tan`` is expressed per unit of the warped metric on the slice, so on
    exact solutions of the evolution system ``tan == normal``; both vanish when
    the Hamiltonian constraint holds.
    """
    if f_tt is None:
        f_tt = f_tt_from_rhs(state, params)
    curv = curvature(GeometrySample(state.f, state.f_t, f_tt), params)
    T = energy_momentum(state, params)
    tan = (curv.ric_tan_coeff - T.T_tan_coeff) * exp(-state.f) - 0.5 * curv.scalar
    normal = curv.ric_normal - 0.5 * curv.scalar - T.T_FF
    return EinsteinResiduals(tan, normal)


def _wk_rate(state: State, params: ModelParams):
    if params.is_even:
        return np.asarray(_wk_even_amplitude(state.f, state.f_t, state.h_plus, params))
    return np.asarray(_wk_odd_amplitudes(state.f, state.f_t, state.h_plus, state.k_plus, params))


def _einstein_rate(state: State, params: ModelParams):
    if params.is_even:
        return np.asarray(_even_amplitudes(state.f, state.f_t, state.h_plus, state.h_minus, params)[0])
    return np.asarray(_odd_amplitudes(state.f, state.f_t, state.h_plus, state.k_plus, params))


def wk_residual(state: State, params: ModelParams, f_tt=None, amplitude_rate=None):
    """How far a parallel-base state is from carrying a WK spinor.

    Sum of |A| (metric condition ``4 f_tt + (n - 2a) f_t^2``) and the
    deviation of ``amplitude_rate`` from the WK amplitude equation evaluated
    with the state's own f. Defaults: f_tt and the amplitude rate from the
    Einstein system.
    """
    if params.lambda_M != 0.0:
        raise InvalidParams("wk_residual requires a parallel base spinor (lambda_M = 0)")
    if f_tt is None:
        f_tt = f_tt_from_rhs(state, params)
    A, _ = warp_hypothesis_residuals(GeometrySample(state.f, state.f_t, f_tt), 0.0, params)
    if amplitude_rate is None:
        amplitude_rate = _einstein_rate(state, params)
    dev = np.abs(np.asarray(amplitude_rate) - _wk_rate(state, params))
    if params.is_even:
        return np.abs(A) + dev
    return np.abs(A) + dev[0] + dev[1]


def conserved_charge(state: State, params: ModelParams):
    """The charge tracked for drift: diff_charge (even Einstein), e^{mf}|h+|^2
    (even WK, where h- = 0 makes diff_charge that quantity) or the odd modulus."""
    if params.is_even:
        return charge_even(state, params).diff_charge
    return charge_odd(state, params)


def _traj_f_tt(traj: Trajectory, fields: State):
    if traj.system.is_wk:
        return np.array([traj.system.warp(float(t)).f_tt for t in traj.times])
    return f_tt_from_rhs(fields, traj.params)


@dataclass
class TrajectoryResiduals:
    """Per-sample residual columns of a trajectory."""

    hamiltonian: np.ndarray
    einstein_tan: np.ndarray
    einstein_normal: np.ndarray
    charge: np.ndarray
    sum_charge: Optional[np.ndarray] = None
    wk_A: Optional[np.ndarray] = None


def trajectory_residuals(traj: Trajectory) -> TrajectoryResiduals:
    """Evaluate every residual at every sample (vectorized over the samples).

    Einstein columns are NaN for WK trajectories: a WK run is a solution of
    the Einstein-Dirac system only for one particular warp rate.
    """
    params = traj.params
    fields = traj.fields()
    f_tt = _traj_f_tt(traj, fields)
    charge = np.asarray(conserved_charge(fields, params), dtype=float)
    sum_charge = None
    if params.is_even and not traj.system.is_wk:
        sum_charge = np.asarray(charge_even(fields, params).sum_charge, dtype=float)
    wk_A = None
    if params.lambda_M == 0.0:
        wk_A, _ = warp_hypothesis_residuals(GeometrySample(fields.f, fields.f_t, f_tt), 0.0, params)
        wk_A = np.abs(np.asarray(wk_A, dtype=float))
    if traj.system.is_wk:
        nan = np.full(len(traj), np.nan)
        return TrajectoryResiduals(nan, nan.copy(), nan.copy(), charge, sum_charge, wk_A)
    ch = np.asarray(hamiltonian_residual(fields, params), dtype=float)
    tan, normal = einstein_residuals(fields, params, f_tt)
    return TrajectoryResiduals(
        ch, np.asarray(tan, dtype=float), np.asarray(normal, dtype=float), charge, sum_charge, wk_A
    )


def wk_amplitude_deviation(traj: Trajectory) -> float:
    """Sup-norm distance between the amplitudes of an Einstein trajectory and
    those of the WK system driven by the closed-form f with ``c = f_t(0)``."""
    params = traj.params
    if params.lambda_M != 0.0:
        raise InvalidParams("WK comparison requires lambda_M = 0")
    c = float(traj.y[0, 1])
    sys_wk = wk_system(params, c)
    wk = integrate(sys_wk, initial_state_wk(params, c), traj.t_end, traj.step, t0=float(traj.times[0]))
    n = min(len(wk), len(traj))
    # even: (Re h+, Im h+), h- is not part of the WK spinor; odd: (h+, k+)
    return float(np.max(np.abs(traj.y[:n, 2:4] - wk.y[:n, 2:4])))


@dataclass
class ResidualReport:
    """Trajectory maxima of the carried residuals and the pass/fail verdict.

    Residuals that do not apply to a run are None and are not checked.
    """

    hamiltonian: Optional[float]
    einstein_tan: Optional[float]
    einstein_normal: Optional[float]
    charge_drift: Optional[float]
    wk_A: Optional[float]
    tolerance: float
    momentum_lhs: float = 0.0
    extra: dict = field(default_factory=dict)

    def carried(self) -> dict:
        values = {
            "hamiltonian": self.hamiltonian,
            "einstein_tan": self.einstein_tan,
            "einstein_normal": self.einstein_normal,
            "charge_drift": self.charge_drift,
            "wk_A": self.wk_A,
            "momentum_lhs": self.momentum_lhs,
        }
        values.update(self.extra)
        return {k: v for k, v in values.items() if v is not None}

    @property
    def passed(self) -> bool:
        return all(np.isfinite(v) and v <= self.tolerance for v in self.carried().values())

    def to_dict(self) -> dict:
        out = {k: float(v) for k, v in self.carried().items()}
        out["tolerance"] = self.tolerance
        out["pass"] = self.passed
        return out


def _max_abs(x) -> Optional[float]:
    if x is None:
        return None
    x = np.asarray(x, dtype=float)
    if np.all(np.isnan(x)):
        return None
    return float(np.max(np.abs(x)))


def verify_trajectory(traj: Trajectory, tolerance: float = 1e-8) -> ResidualReport:
    """Recompute residuals along a trajectory and compare maxima with ``tolerance``.

    Charge drift is checked only where the charge is conserved: always for the
    even diff_charge, and for the odd modulus when lambda_M = 0. The wk_A
    residual is carried for parallel-base runs.
    """
    params = traj.params
    res = trajectory_residuals(traj)
    conserved = params.is_even or params.lambda_M == 0.0
    drift = _max_abs(res.charge - res.charge[0]) if conserved else None
    wk_A = _max_abs(res.wk_A) if res.wk_A is not None else None
    return ResidualReport(
        hamiltonian=_max_abs(res.hamiltonian),
        einstein_tan=_max_abs(res.einstein_tan),
        einstein_normal=_max_abs(res.einstein_normal),
        charge_drift=drift,
        wk_A=wk_A,
        tolerance=float(tolerance),
    )
