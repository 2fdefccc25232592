from dataclasses import replace

import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from wpdirac import (
    EvenState,
    InvalidParams,
    ModelParams,
    OddState,
    einstein_residuals,
    einstein_system,
    energy_momentum,
    energy_momentum_even,
    energy_momentum_odd,
    hamiltonian_residual,
    initial_state,
    initial_state_wk,
    integrate,
    momentum_lhs_residual,
    rhs_even,
    rhs_odd,
    verify_trajectory,
    wk_residual,
    wk_system,
)
from wpdirac.constraints import _wk_rate, f_tt_from_rhs, trajectory_residuals, wk_amplitude_deviation
from wpdirac.errors import InadmissibleData


def even(m=1, **kw):
    return ModelParams("even", m, **kw)


def odd(m=2, **kw):
    return ModelParams("odd", m, **kw)


# -- energy-momentum ----------------------------------------------------------------


def test_energy_momentum_vanishes_without_couplings():
    assert energy_momentum_even(EvenState(0.3, 1.0, 2.0, 1j), even(2)) == (0.0, 0.0, 0.0)
    assert energy_momentum_odd(OddState(0.3, 1.0, 2.0, -1.0), odd(3)) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("lm, lq, eps", [(0.0, 1.0, 1), (0.5, -1.0, -1), (1.0, 1.0, 1)])
def test_even_normal_component_at_start(lm, lq, eps):
    T = energy_momentum_even(EvenState(0.0, 0.0, 1.0, 1.0), even(2, lambda_M=lm, lambda_Q=lq, epsilon=eps))
    assert T.T_FF == pytest.approx(eps * (lq - lm) / 2)


def test_even_tangential_component():
    T = energy_momentum_even(EvenState(0.0, 0.0, 2.0, 1.0), even(1, lambda_M=1.0))
    assert T.T_tan_coeff == pytest.approx(0.5)


@pytest.mark.parametrize("lm, lq, eps", [(0.0, 1.0, 1), (0.5, -1.0, -1)])
def test_odd_normal_component_at_start(lm, lq, eps):
    T = energy_momentum_odd(OddState(0.0, 0.0, 1.0, 1.0), odd(3, lambda_M=lm, lambda_Q=lq, epsilon=eps))
    assert T.T_FF == pytest.approx(eps * (lq - lm))


def test_odd_trace():
    assert energy_momentum_odd(OddState(0.0, 0.0, 1.0, 0.0), odd(2, lambda_Q=1.0, P=2.0)).tr_T == 1.0


def test_energy_momentum_parity_checked():
    with pytest.raises(InvalidParams):
        energy_momentum_even(EvenState(0, 0, 1, 1), odd(2))
    with pytest.raises(InvalidParams):
        energy_momentum_odd(OddState(0, 0, 1, 1), even(1))


def _solution_state(p, t=0.2):
    traj = integrate(einstein_system(p), initial_state(p), t, 1e-3)
    return traj.state(len(traj) - 1)


@pytest.mark.parametrize(
    "p",
    [
        even(1, a=1.0, lambda_M=0.5, lambda_Q=1.0),
        even(3, a=0.0, lambda_M=-0.5, lambda_Q=1.0),
        odd(2, a=1.5, lambda_M=1.0, lambda_Q=1.0, P=2.0),
        odd(4, a=3.0, lambda_M=0.5, lambda_Q=-1.0, epsilon=-1),
    ],
)
def test_energy_momentum_trace_identity(p):
    s = _solution_state(p)
    T = energy_momentum(s, p)
    # T_tan_coeff is in base-metric units; e^{-f} converts to the warped slice metric
    assert T.tr_T == pytest.approx(p.n * np.exp(-s.f) * T.T_tan_coeff + T.T_FF, rel=1e-12, abs=1e-14)


# -- Hamiltonian constraint -------------------------------------------------------------------


def test_hamiltonian_example():
    p = even(1, lambda_Q=1.0)
    assert hamiltonian_residual(initial_state(p), p) == pytest.approx(0.0, abs=1e-15)


def test_hamiltonian_static_uncoupled():
    assert hamiltonian_residual(EvenState(0.0, 0.0, 1.0, 1.0), even(2)) == 0.0
    assert hamiltonian_residual(OddState(0.5, 0.0, 1.0, 1.0), odd(2)) == 0.0


def test_initial_data_symbolically_constrained():
    # C_H at f = 0, unit amplitudes: -S_g + n(n-1) f_t^2 / 4 - c_T eps (lQ - lM) P,
    # with c_T = 1 (even, symmetric split) or 2 (odd)
    m, lm, lq, eps, P = sp.symbols("m lambda_M lambda_Q epsilon P")
    for n, c_T, radicand in (
        (2 * m, 1, 4 * lm**2 / m**2 + 2 * eps * (lq - lm) * P / (m * (2 * m - 1))),
        (2 * m - 1, 2, 16 * lm**2 / (2 * m - 1) ** 2 + 4 * eps * (lq - lm) * P / ((m - 1) * (2 * m - 1))),
    ):
        s_g = 4 * (n - 1) * lm**2 / n
        c_h = -s_g + n * (n - 1) * radicand / 4 - c_T * eps * (lq - lm) * P
        assert sp.simplify(c_h) == 0


params_strategy = st.builds(
    ModelParams,
    parity=st.sampled_from(["even", "odd"]),
    m=st.integers(2, 5),
    a=st.floats(-1, 4),
    lambda_M=st.floats(-2, 2),
    lambda_Q=st.floats(-2, 2),
    epsilon=st.sampled_from([1, -1]),
    P=st.floats(0.1, 3),
)


@settings(max_examples=300, deadline=None)
@given(params_strategy, st.sampled_from([1, -1]))
def test_initial_data_numerically_constrained(p, sign):
    try:
        s = initial_state(p, sign)
    except InadmissibleData:
        assume(False)
    scale = 1.0 + p.lambda_M**2 + abs(p.lambda_Q) * p.P + abs(p.lambda_M) * p.P
    assert abs(hamiltonian_residual(s, p)) <= 1e-12 * scale


def _random_state(p, rng):
    f, f_t = rng.uniform(-1, 1, 2)
    if p.is_even:
        # the even reduction lives on h- = conj(h+), which the flow preserves
        h = complex(*rng.normal(size=2))
        return EvenState(f, f_t, h, h.conjugate())
    h, k = rng.normal(size=2)
    return OddState(f, f_t, h, k)


def _shift(s, d, eps):
    cls = type(s)
    return cls(*(getattr(s, k) + eps * getattr(d, k) for k in s.__dataclass_fields__))


@pytest.mark.parametrize(
    "p",
    [
        even(1, a=1.0, lambda_M=0.5, lambda_Q=1.0),
        even(2, a=3.0, lambda_M=-1.0, lambda_Q=0.3, epsilon=-1, P=2.0),
        odd(2, a=0.0, lambda_M=1.0, lambda_Q=-1.0),
        odd(3, a=2.5, lambda_M=0.5, lambda_Q=1.0, P=0.5),
    ],
)
def test_hamiltonian_is_a_first_integral(p):
    # dC_H/dt vanishes along the vector field at any state, constrained or not
    rng = np.random.default_rng(3)
    rhs = rhs_even if p.is_even else rhs_odd
    h = 1e-4
    for _ in range(5):
        s = _random_state(p, rng)
        d = rhs(s, p)
        rate = (hamiltonian_residual(_shift(s, d, h), p) - hamiltonian_residual(_shift(s, d, -h), p)) / (2 * h)
        assert abs(rate) < 1e-6 * (1 + abs(hamiltonian_residual(s, p)))


def test_momentum_lhs():
    p = odd(3, a=1.0, lambda_Q=1.0)
    assert momentum_lhs_residual(initial_state(p), p) == 0.0
    assert momentum_lhs_residual(initial_state(p), p, slice_gradient=[0.1, 0.0, 0.0, 0.0, 0.0]) > 0


# -- Einstein residuals ---------------------------------------------------------------------------


def test_einstein_static_uncoupled():
    assert einstein_residuals(EvenState(0.0, 0.0, 1.0, 1.0), even(1)) == (0.0, 0.0)


@pytest.mark.parametrize(
    "p",
    [even(2, a=1.0, lambda_M=0.5, lambda_Q=-1.0, epsilon=-1), odd(3, a=0.0, lambda_M=-1.0, lambda_Q=1.0)],
)
def test_einstein_residuals_track_hamiltonian(p):
    # on the flow both projections reduce to half the Hamiltonian residual
    rng = np.random.default_rng(11)
    for _ in range(5):
        s = _random_state(p, rng)
        tan, normal = einstein_residuals(s, p)
        ch = hamiltonian_residual(s, p)
        assert tan == pytest.approx(ch / 2, rel=1e-10, abs=1e-12)
        assert normal == pytest.approx(ch / 2, rel=1e-10, abs=1e-12)


def test_tangential_residual_sensitivity_to_f_tt():
    p = odd(2, a=1.0, lambda_Q=1.0)
    s = OddState(0.2, 0.7, 0.4, -0.3)
    tan0, normal0 = einstein_residuals(s, p)
    bump = 1e-3
    tan1, normal1 = einstein_residuals(s, p, f_tt=None)
    assert (tan0, normal0) == (tan1, normal1)
    f_tt = f_tt_from_rhs(s, p)
    t2, _ = einstein_residuals(s, p, f_tt=f_tt + bump)
    # d(tan)/d(f_tt) = (n-1)/2 e^{-af}
    assert (t2 - tan0) / bump == pytest.approx((p.n - 1) / 2 * np.exp(-p.a * s.f), rel=1e-6)


def test_einstein_residuals_along_flow():
    p = even(1, a=1.0, lambda_Q=1.0)
    traj = integrate(einstein_system(p), initial_state(p), 0.5, 1e-4)
    res = trajectory_residuals(traj)
    assert np.max(np.abs(res.einstein_tan)) <= 1e-6
    assert np.max(np.abs(res.einstein_normal)) <= 1e-6


# -- WK residual ----------------------------------------------------------------------------------


def test_wk_residual_on_wk_run():
    p = odd(3, a=1.0, lambda_Q=1.0)
    traj = integrate(wk_system(p, 0.8), initial_state_wk(p, 0.8), 0.5, 1e-3)
    for i in range(0, len(traj), 100):
        w = traj.system.warp(float(traj.times[i]))
        s = traj.state(i)
        assert wk_residual(s, p, f_tt=w.f_tt, amplitude_rate=_wk_rate(s, p)) <= 1e-8


def test_wk_residual_on_einstein_run():
    p = even(2, a=0.5, lambda_Q=1.0)
    traj = integrate(einstein_system(p), initial_state(p), 0.5, 1e-4)
    assert max(float(np.max(wk_residual(s, p))) for s in traj.states[::500]) <= 1e-6
    assert wk_amplitude_deviation(traj) <= 1e-6


def test_wk_residual_static():
    assert wk_residual(EvenState(0.0, 0.0, 1.0, 1.0), even(1)) == 0.0


def test_wk_residual_rejects_killing_base():
    with pytest.raises(InvalidParams):
        wk_residual(EvenState(0.0, 1.0, 1.0, 1.0), even(1, lambda_M=1.0))


# -- reports -------------------------------------------------------------------------------------


def test_verify_passes_on_flow_and_fails_on_corruption():
    p = even(2, a=1.0, lambda_M=0.5, lambda_Q=1.0)
    traj = integrate(einstein_system(p), initial_state(p), 0.3, 1e-4)
    report = verify_trajectory(traj, 1e-8)
    assert report.passed
    assert report.charge_drift <= 1e-12
    y = traj.y.copy()
    y[:, 1] *= 1.01
    bad = verify_trajectory(replace(traj, y=y), 1e-8)
    assert not bad.passed
    assert bad.hamiltonian > 1e-4
    assert bad.to_dict()["pass"] is False


def test_verify_wk_run_skips_einstein_columns():
    p = even(1, a=1.0, lambda_Q=1.0)
    traj = integrate(wk_system(p, 1.0), initial_state_wk(p, 1.0), 0.5, 1e-3)
    report = verify_trajectory(traj)
    assert report.hamiltonian is None and report.einstein_tan is None
    assert report.wk_A <= 1e-12
    assert report.passed
