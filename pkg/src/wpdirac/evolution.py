"""Evolution systems for the warp factor and the spinor amplitudes.

Two families of ODEs are integrated:

* the Einstein-Dirac reduction, in which f is evolved together with the
  amplitudes (``einstein_system``), and
* the weak Killing (WK) amplitude equations over a parallel base, in which f is
  prescribed by :func:`wpdirac.geometry.closed_form_f` (``wk_system``).

Internally every system acts on a packed real vector
``[f, f_t, Re h+, Im h+, Re h-, Im h-]`` (even) or ``[f, f_t, h+, k+]`` (odd)
so that a single fixed-step RK4 driver serves all four.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Union

import numpy as np

from .errors import InadmissibleData, InvalidParams, OutOfDomain
from .geometry import ModelParams, WarpProfile, _log_branch, closed_form_f, exp

__all__ = [
    "EvenState",
    "OddState",
    "Cause",
    "Termination",
    "OdeSystem",
    "Trajectory",
    "EvenCharges",
    "sigma_factor",
    "rhs_even",
    "rhs_odd",
    "rhs_wk_even",
    "rhs_wk_odd",
    "initial_state_even",
    "initial_state_odd",
    "initial_state",
    "initial_state_wk",
    "einstein_system",
    "wk_system",
    "integrate",
    "integrate_to_times",
    "charge_even",
    "charge_odd",
]


@dataclass(frozen=True)
class EvenState:
    """State of the even system. Fields may also hold equal-shape arrays."""

    f: float
    f_t: float
    h_plus: complex
    h_minus: complex


@dataclass(frozen=True)
class OddState:
    """State of the odd system; the amplitudes can be taken real."""

    f: float
    f_t: float
    h_plus: float
    k_plus: float


State = Union[EvenState, OddState]


def sigma_factor(m: int) -> complex:
    """``i**(2m + 3)``, i.e. ``(-1)**(m + 1) * i``."""
    if m < 1:
        raise InvalidParams(f"m must be >= 1, got {m}")
    return 1j if m % 2 == 1 else -1j


def _herm(z):
    """|z|^2 for complex scalars, real scalars or arrays."""
    return (z * z.conjugate()).real


# -- right-hand sides on unpacked fields -------------------------------------


def _even_ftt(f, f_t, hp, hm, p: ModelParams):
    m, a, eps = p.m, p.a, p.epsilon
    cross = 2.0 * (hp * hm.conjugate()).real
    return (
        0.5 * a * f_t * f_t
        - 2.0 / (m * m) * p.lambda_M**2 * exp((a - 1.0) * f)
        - eps * p.lambda_Q / (2 * m - 1) * exp(a * f) * _herm(hp) * p.P
        + (2 * m + 1) / (4.0 * m * (2 * m - 1)) * eps * p.lambda_M * exp((a - 0.5) * f) * cross * p.P
    )


def _even_amplitudes(f, f_t, hp, hm, p: ModelParams):
    sig = sigma_factor(p.m)
    half_m = 0.5 * p.m
    q = sig * p.lambda_Q * exp(0.5 * p.a * f)
    k = sig * p.lambda_M * exp(0.5 * (p.a - 1.0) * f)
    dhp = -half_m * f_t * hp + q * hp - k * hm
    dhm = k * hp - half_m * f_t * hm - q * hm
    return dhp, dhm


def _odd_ftt(f, f_t, h, k, p: ModelParams):
    m, a, eps = p.m, p.a, p.epsilon
    return (
        0.5 * a * f_t * f_t
        - 8.0 / (2 * m - 1) ** 2 * p.lambda_M**2 * exp((a - 1.0) * f)
        - eps * p.lambda_Q / (2.0 * (m - 1)) * exp(a * f) * (h * h + k * k) * p.P
        + 2.0 * m / ((m - 1) * (2 * m - 1)) * eps * p.lambda_M * exp((a - 0.5) * f) * h * k * p.P
    )


def _odd_amplitudes(f, f_t, h, k, p: ModelParams):
    damp = 0.25 * (2 * p.m - 1) * f_t
    q = p.lambda_Q * exp(0.5 * p.a * f)
    r = p.lambda_M * exp(0.5 * (p.a - 1.0) * f)
    dh = -damp * h - r * h + q * k
    dk = -q * h - damp * k + r * k
    return dh, dk


def _wk_even_amplitude(f, f_t, hp, p: ModelParams):
    # i**(2m+1) = -sigma_factor(m)
    return sigma_factor(p.m) * p.lambda_Q * exp(0.5 * p.a * f) * hp - 0.5 * p.m * f_t * hp


def _wk_odd_amplitudes(f, f_t, h, k, p: ModelParams):
    damp = 0.25 * (2 * p.m - 1) * f_t
    q = p.lambda_Q * exp(0.5 * p.a * f)
    return -damp * h + q * k, -q * h - damp * k


def _require(p: ModelParams, even: bool):
    if p.is_even != even:
        raise InvalidParams(f"system requires {'even' if even else 'odd'} parity, got {p.parity.value}")


def _require_parallel(p: ModelParams):
    if p.lambda_M != 0.0:
        raise InvalidParams(f"weak Killing systems need a parallel base spinor (lambda_M = 0), got {p.lambda_M}")


def rhs_even(state: EvenState, params: ModelParams) -> EvenState:
    """Time derivative of an even Einstein-Dirac state, returned as an EvenState."""
    _require(params, True)
    f, f_t, hp, hm = state.f, state.f_t, state.h_plus, state.h_minus
    dhp, dhm = _even_amplitudes(f, f_t, hp, hm, params)
    return EvenState(f_t, _even_ftt(f, f_t, hp, hm, params), dhp, dhm)


def rhs_odd(state: OddState, params: ModelParams) -> OddState:
    """Time derivative of an odd Einstein-Dirac state."""
    _require(params, False)
    f, f_t, h, k = state.f, state.f_t, state.h_plus, state.k_plus
    dh, dk = _odd_amplitudes(f, f_t, h, k, params)
    return OddState(f_t, _odd_ftt(f, f_t, h, k, params), dh, dk)


def rhs_wk_even(state: EvenState, params: ModelParams, c: float, t: float) -> EvenState:
    """WK amplitude derivative with f taken from the closed form at time t.

    The f and f_t entries of the tangent are the closed-form f_t and f_tt;
    h_minus is not part of the WK system and has zero derivative.
    """
    _require(params, True)
    _require_parallel(params)
    w = closed_form_f(params, c, t)
    dhp = _wk_even_amplitude(w.f, w.f_t, state.h_plus, params)
    return EvenState(w.f_t, w.f_tt, dhp, 0.0 * state.h_minus)


def rhs_wk_odd(state: OddState, params: ModelParams, c: float, t: float) -> OddState:
    """Linear WK system for (h+, k+) driven by the closed-form warp factor."""
    _require(params, False)
    _require_parallel(params)
    w = closed_form_f(params, c, t)
    dh, dk = _wk_odd_amplitudes(w.f, w.f_t, state.h_plus, state.k_plus, params)
    return OddState(w.f_t, w.f_tt, dh, dk)


# -- initial data -------------------------------------------------------------


def _check_sign(sign):
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")


def _initial_rate(radicand: float, sign: int, params: ModelParams) -> float:
    _check_sign(sign)
    if radicand < 0:
        raise InadmissibleData(radicand, params.epsilon)
    return sign * math.sqrt(radicand)


def initial_radicand(params: ModelParams) -> float:
    """The quantity whose square root is |f_t(0)| for the standard initial data."""
    m, lm, eps = params.m, params.lambda_M, params.epsilon
    shift = eps * (params.lambda_Q - lm) * params.P
    if params.is_even:
        return 4.0 * lm * lm / (m * m) + 2.0 * shift / (m * (2 * m - 1))
    return 16.0 * lm * lm / (2 * m - 1) ** 2 + 4.0 * shift / ((m - 1) * (2 * m - 1))


def initial_state_even(params: ModelParams, sign: int = 1) -> EvenState:
    """f(0) = 0, h+(0) = h-(0) = 1 and f_t(0) fixed by the Hamiltonian constraint."""
    _require(params, True)
    return EvenState(0.0, _initial_rate(initial_radicand(params), sign, params), 1.0 + 0j, 1.0 + 0j)


def initial_state_odd(params: ModelParams, sign: int = 1) -> OddState:
    """f(0) = 0, h+(0) = k+(0) = 1 and f_t(0) fixed by the Hamiltonian constraint."""
    _require(params, False)
    return OddState(0.0, _initial_rate(initial_radicand(params), sign, params), 1.0, 1.0)


def initial_state(params: ModelParams, sign: int = 1) -> State:
    if params.is_even:
        return initial_state_even(params, sign)
    return initial_state_odd(params, sign)


def initial_state_wk(params: ModelParams, c: float) -> State:
    """WK initial data: f(0) = 0, f_t(0) = c, h+(0) = 1 (and k+(0) = 1 when odd).

    In the even case the WK spinor has no negative-chirality part, so h- = 0.
    """
    if params.is_even:
        return EvenState(0.0, float(c), 1.0 + 0j, 0j)
    return OddState(0.0, float(c), 1.0, 1.0)


# -- packed systems -----------------------------------------------------------


@dataclass(frozen=True)
class OdeSystem:
    """One of the four evolution systems, acting on packed real vectors.

    Use :func:`einstein_system` or :func:`wk_system` to construct.
    """

    params: ModelParams
    kind: str  # "einstein" or "wk"
    c: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("einstein", "wk"):
            raise ValueError(f"unknown system kind {self.kind!r}")
        if self.kind == "wk":
            _require_parallel(self.params)
            if self.c is None:
                raise ValueError("wk systems need the warp rate c")

    @property
    def dim(self) -> int:
        return 6 if self.params.is_even else 4

    @property
    def is_wk(self) -> bool:
        return self.kind == "wk"

    def pack(self, state: State) -> np.ndarray:
        if self.params.is_even:
            hp, hm = complex(state.h_plus), complex(state.h_minus)
            return np.array([state.f, state.f_t, hp.real, hp.imag, hm.real, hm.imag], dtype=float)
        return np.array([state.f, state.f_t, state.h_plus, state.k_plus], dtype=float)

    def unpack(self, y) -> State:
        """Packed vector (d,) or sample matrix (N, d) to a state with scalar or array fields."""
        y = np.asarray(y, dtype=float)
        cols = y.T
        if self.params.is_even:
            if y.ndim == 1:
                return EvenState(
                    float(cols[0]), float(cols[1]), complex(cols[2], cols[3]), complex(cols[4], cols[5])
                )
            return EvenState(cols[0], cols[1], cols[2] + 1j * cols[3], cols[4] + 1j * cols[5])
        if y.ndim == 1:
            return OddState(*(float(v) for v in cols))
        return OddState(cols[0], cols[1], cols[2], cols[3])

    def warp(self, t: float) -> WarpProfile:
        return closed_form_f(self.params, self.c, t)

    def derivative(self, t: float, y: np.ndarray) -> np.ndarray:
        """Packed right-hand side. Scalar path; raises OverflowError on overflow."""
        p = self.params
        if p.is_even:
            f, f_t, x1, y1, x2, y2 = y.tolist()
            hp, hm = complex(x1, y1), complex(x2, y2)
            if self.kind == "einstein":
                dhp, dhm = _even_amplitudes(f, f_t, hp, hm, p)
                return np.array(
                    [f_t, _even_ftt(f, f_t, hp, hm, p), dhp.real, dhp.imag, dhm.real, dhm.imag]
                )
            w = closed_form_f(p, self.c, t)
            dhp = _wk_even_amplitude(w.f, w.f_t, hp, p)
            return np.array([w.f_t, w.f_tt, dhp.real, dhp.imag, 0.0, 0.0])
        f, f_t, h, k = y.tolist()
        if self.kind == "einstein":
            dh, dk = _odd_amplitudes(f, f_t, h, k, p)
            return np.array([f_t, _odd_ftt(f, f_t, h, k, p), dh, dk])
        w = closed_form_f(p, self.c, t)
        dh, dk = _wk_odd_amplitudes(w.f, w.f_t, h, k, p)
        return np.array([w.f_t, w.f_tt, dh, dk])

    def derivatives(self, times: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Row-wise packed derivative for a sample matrix (N, d)."""
        return np.array([self.derivative(float(t), row) for t, row in zip(times, y)])

    def settle(self, t: float, y: np.ndarray) -> np.ndarray:
        """Pin the prescribed warp factor onto a WK state; identity for Einstein systems."""
        if self.kind == "wk":
            w = closed_form_f(self.params, self.c, t)
            y[0], y[1] = w.f, w.f_t
        return y


def einstein_system(params: ModelParams) -> OdeSystem:
    return OdeSystem(params, "einstein")


def wk_system(params: ModelParams, c: float) -> OdeSystem:
    return OdeSystem(params, "wk", float(c))


# -- trajectories -------------------------------------------------------------


class Cause(enum.Enum):
    REACHED_END = "ReachedEnd"
    BLOW_UP = "BlowUp"
    DOMAIN_EXIT = "DomainExit"


@dataclass(frozen=True)
class Termination:
    cause: Cause
    t_est: Optional[float] = None

    def __str__(self):
        if self.cause is Cause.REACHED_END:
            return self.cause.value
        return f"{self.cause.value}({self.t_est!r})"

    @classmethod
    def parse(cls, text: str) -> "Termination":
        text = text.strip()
        if "(" not in text:
            return cls(Cause(text))
        name, rest = text.split("(", 1)
        return cls(Cause(name), float(rest.rstrip(")")))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Fixed-step solution of an :class:`OdeSystem`.

    ``times`` is strictly monotone (decreasing for backward runs) and ``y``
    holds one packed state per row.
    """

    system: OdeSystem
    times: np.ndarray
    y: np.ndarray
    step: float
    termination: Termination
    t_end: float
    error_estimate: Optional[float] = None

    def __len__(self):
        return len(self.times)

    @property
    def params(self) -> ModelParams:
        return self.system.params

    @property
    def resolved_window(self) -> float:
        return abs(float(self.times[-1] - self.times[0]))

    @property
    def direction(self) -> int:
        return 1 if self.t_end > self.times[0] else -1

    def state(self, i: int) -> State:
        return self.system.unpack(self.y[i])

    @property
    def states(self) -> list:
        return [self.state(i) for i in range(len(self))]

    def fields(self) -> State:
        """All samples as a single state whose fields are arrays."""
        return self.system.unpack(self.y)

    def derivatives(self) -> np.ndarray:
        return self.system.derivatives(self.times, self.y)

    def truncated(self, window: float) -> "Trajectory":
        """Prefix with ``|t - t0| <= window``, marked as reaching its (new) end."""
        keep = np.abs(self.times - self.times[0]) <= window * (1 + 1e-12)
        times = self.times[keep]
        return replace(
            self,
            times=times,
            y=self.y[keep],
            termination=Termination(Cause.REACHED_END),
            t_end=float(times[-1]),
        )


def _rk4(F, t, y, h, k1=None):
    if k1 is None:
        k1 = F(t, y)
    k2 = F(t + 0.5 * h, y + (0.5 * h) * k1)
    k3 = F(t + 0.5 * h, y + (0.5 * h) * k2)
    k4 = F(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4), k4


def _grid(t0: float, t_end: float, step: float) -> np.ndarray:
    span = t_end - t0
    n = max(1, int(math.ceil(abs(span) / step - 1e-9)))
    offsets = np.minimum(np.arange(n + 1) * step, abs(span))
    return t0 + math.copysign(1.0, span) * offsets


def _unresolved_cause(system, h):
    # WK amplitudes solve a linear system, so they can only lose resolution
    # near the edge of the closed-form domain.
    if system.is_wk:
        d = _log_branch(system.params)
        if d is not None and d * system.c * h < 0:
            return Cause.DOMAIN_EXIT
    return Cause.BLOW_UP


def _run(system, y0, grid, f_bound, amp_bound, local_tol):
    # The slope at the new point doubles as the next first stage; against k4 it
    # gives an embedded third-order estimate of the local error for free.
    F = system.derivative
    out = np.empty((len(grid), len(y0)))
    out[0] = y0
    y = y0
    k1 = None
    with np.errstate(over="raise", invalid="raise"):
        for i in range(1, len(grid)):
            t_prev, t = grid[i - 1], grid[i]
            h = t - t_prev
            try:
                y_new, k4 = _rk4(F, t_prev, y, h, k1)
                y_new = system.settle(t, y_new)
            except OutOfDomain:
                return out[:i], Termination(Cause.DOMAIN_EXIT, float(t_prev))
            except (OverflowError, FloatingPointError, ZeroDivisionError):
                return out[:i], Termination(Cause.BLOW_UP, float(t_prev))
            if (
                not np.all(np.isfinite(y_new))
                or abs(y_new[0]) > f_bound
                or abs(y_new[1]) > f_bound
                or np.max(np.abs(y_new[2:])) > amp_bound
            ):
                return out[:i], Termination(Cause.BLOW_UP, float(t_prev))
            out[i] = y = y_new
            if i == len(grid) - 1:
                break
            try:
                k1 = F(t, y)
            except OutOfDomain:
                return out[: i + 1], Termination(Cause.DOMAIN_EXIT, float(t))
            except (OverflowError, FloatingPointError, ZeroDivisionError):
                return out[: i + 1], Termination(Cause.BLOW_UP, float(t))
            if local_tol is not None:
                local = abs(h) / 6.0 * float(np.max(np.abs(k1 - k4)))
                if not local <= local_tol * (1.0 + float(np.max(np.abs(y)))):
                    return out[:i], Termination(_unresolved_cause(system, h), float(t_prev))
    return out, Termination(Cause.REACHED_END)


def integrate(
    system: OdeSystem,
    state0: State,
    t_end: float,
    step: float,
    *,
    t0: float = 0.0,
    f_bound: float = 1e6,
    amp_bound: float = 1e12,
    local_tol: Optional[float] = 1e-6,
    estimate_error: bool = False,
) -> Trajectory:
    """Classical fourth-order Runge-Kutta at a fixed step from ``t0`` to ``t_end``.

    Sample times are ``t0 + k * step`` (the last step is shortened to land on
    ``t_end``); a negative direction integrates backward. The run stops early
    with ``BlowUp`` when |f| or |f_t| exceeds ``f_bound``, an amplitude exceeds
    ``amp_bound`` or a non-finite value appears, and with ``DomainExit`` when a
    WK run leaves the closed-form domain. It also stops with ``BlowUp`` once a
    step is no longer resolved: the embedded local error estimate exceeds
    ``local_tol * (1 + max|y|)`` (pass None to switch this off). In every case
    ``t_est`` is the last fully resolved time.

    With ``estimate_error`` the run is repeated at half the step and the
    Richardson estimate ``16/15 * max |y_h - y_{h/2}|`` over the common
    samples is stored in ``error_estimate``.
    """
    if not (step > 0 and math.isfinite(step)):
        raise ValueError(f"step must be positive and finite, got {step!r}")
    if t_end == t0 or not math.isfinite(t_end):
        raise ValueError(f"t_end must be finite and differ from t0, got {t_end!r}")
    y0 = system.settle(t0, system.pack(state0))
    grid = _grid(t0, t_end, step)
    y, termination = _run(system, y0, grid, f_bound, amp_bound, local_tol)
    times = grid[: len(y)]
    err = None
    if estimate_error:
        fine_grid = _grid(t0, t_end, 0.5 * step)
        fine, _ = _run(system, y0, fine_grid, f_bound, amp_bound, local_tol)
        fine_times = fine_grid[: len(fine)]
        idx = np.searchsorted(fine_times * np.sign(t_end - t0), times * np.sign(t_end - t0))
        ok = (idx < len(fine_times)) & np.isclose(fine_times[np.minimum(idx, len(fine_times) - 1)], times)
        if ok.any():
            err = float(16.0 / 15.0 * np.max(np.abs(y[ok] - fine[idx[ok]])))
    return Trajectory(system, times, y, float(step), termination, float(t_end), err)


def integrate_to_times(system: OdeSystem, state0: State, targets, max_step: float) -> np.ndarray:
    """Packed states at the requested times, integrating through them in order.

    Each segment between consecutive targets is split into equal steps no
    longer than ``max_step``, so every target is hit exactly. Targets must
    share one sign (or be zero) relative to the start at t = 0.
    """
    targets = np.asarray(targets, dtype=float)
    order = np.argsort(np.abs(targets))
    out = np.empty((len(targets), system.dim))
    y = system.settle(0.0, system.pack(state0))
    t = 0.0
    for j in order:
        target = float(targets[j])
        span = target - t
        if span != 0.0:
            n = max(1, int(math.ceil(abs(span) / max_step - 1e-9)))
            h = span / n
            for i in range(n):
                y = system.settle(t + (i + 1) * h, _rk4(system.derivative, t + i * h, y, h)[0])
            t = target
        out[j] = y
    return out


# -- conserved quantities -----------------------------------------------------


class EvenCharges(NamedTuple):
    diff_charge: float
    sum_charge: float


def charge_even(state: EvenState, params: ModelParams) -> EvenCharges:
    """``e^{mf}(|h+|^2 - |h-|^2)`` (always conserved) and ``e^{mf}(|h+|^2 + |h-|^2)``
    (conserved when lambda_M = 0)."""
    _require(params, True)
    w = exp(params.m * state.f)
    p2, m2 = _herm(state.h_plus), _herm(state.h_minus)
    return EvenCharges(w * (p2 - m2), w * (p2 + m2))


def charge_odd(state: OddState, params: ModelParams):
    """``e^{(2m-1)f/2}(h+^2 + k+^2)``, conserved when lambda_M = 0."""
    _require(params, False)
    return exp(0.5 * (2 * params.m - 1) * state.f) * (_herm(state.h_plus) + _herm(state.k_plus))
