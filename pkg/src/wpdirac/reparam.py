"""Pull a solution on (-omega, omega) back to the whole real line.

The diffeomorphism ``gamma(s) = (2 omega / pi) arctan(s)`` maps R onto
(-omega, omega). Composition with the discrete trajectory uses cubic Hermite
interpolation, with slopes taken from the evolution system itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import WindowError
from .evolution import OdeSystem, Trajectory
from .geometry import ModelParams

__all__ = ["GlobalTrajectory", "gamma", "gamma_prime", "pullback_lapse", "pullback_trajectory"]


def gamma(s, omega: float):
    """``(2 omega / pi) * arctan(s)``: odd, increasing, onto (-omega, omega)."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega!r}")
    return 2.0 * omega / math.pi * np.arctan(s)


def gamma_prime(s, omega: float):
    return 2.0 * omega / (math.pi * (1.0 + np.square(s)))


def pullback_lapse(f_star, a: float, s, omega: float):
    """Coefficient of ds^2 in the pulled-back metric: ``e^{a f*} (dt/ds)^2``."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega!r}")
    return np.exp(a * np.asarray(f_star)) * 4.0 * omega**2 / (math.pi**2 * (np.square(s) + 1.0) ** 2)


@dataclass(frozen=True, eq=False)
class GlobalTrajectory:
    """Samples of the pulled-back solution on an s-grid.

    ``y`` holds packed states at ``t_values = gamma(s_values)``;
    ``interpolation_error`` is the largest gap between the Hermite interpolant
    and an independent cubic spline through the same samples.
    """

    system: OdeSystem
    s_values: np.ndarray
    t_values: np.ndarray
    y: np.ndarray
    lapse_values: np.ndarray
    omega: float
    interpolation_error: float

    def __len__(self):
        return len(self.s_values)

    @property
    def params(self) -> ModelParams:
        return self.system.params

    @property
    def times(self) -> np.ndarray:
        return self.t_values

    def fields(self):
        return self.system.unpack(self.y)


def _merge(traj: Trajectory, backward: Trajectory | None):
    """Combine one or two one-sided runs into increasing (times, y)."""
    parts = [traj] if backward is None else [traj, backward]
    fwd = [p for p in parts if p.direction > 0]
    bwd = [p for p in parts if p.direction < 0]
    if len(fwd) > 1 or len(bwd) > 1:
        raise ValueError("need at most one forward and one backward trajectory")
    times, ys = [], []
    if bwd:
        times.append(bwd[0].times[::-1])
        ys.append(bwd[0].y[::-1])
    if fwd:
        skip = 1 if bwd else 0
        times.append(fwd[0].times[skip:])
        ys.append(fwd[0].y[skip:])
    fwd_window = fwd[0].resolved_window if fwd else 0.0
    bwd_window = bwd[0].resolved_window if bwd else 0.0
    return np.concatenate(times), np.concatenate(ys), fwd_window, bwd_window


def pullback_trajectory(
    traj: Trajectory, omega: float, s_grid, backward: Trajectory | None = None
) -> GlobalTrajectory:
    """Sample ``f o gamma`` and the amplitudes ``h o gamma`` on ``s_grid``.

    Negative s values need a backward run, passed either as ``traj`` or as
    ``backward``. ``omega`` may not exceed the resolved window on any side the
    grid touches.

    Raises
    ------
    WindowError
        If ``omega`` exceeds the resolved window; carries the largest admissible omega.
    """
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega!r}")
    s = np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or len(s) == 0:
        raise ValueError("s_grid must be a non-empty 1-d sequence")
    if len(s) > 1 and not np.all(np.diff(s) > 0):
        raise ValueError("s_grid must be strictly increasing")
    if backward is not None and backward.system != traj.system:
        raise ValueError("forward and backward runs must share one system")
    times, y, fwd_window, bwd_window = _merge(traj, backward)
    windows = []
    if np.any(s > 0):
        windows.append(fwd_window)
    if np.any(s < 0):
        windows.append(bwd_window)
    max_omega = min(windows) if windows else max(fwd_window, bwd_window)
    if omega > max_omega:
        raise WindowError(omega, max_omega)

    t_query = gamma(s, omega)
    system = traj.system
    slopes = system.derivatives(times, y)
    hermite = CubicHermiteSpline(times, y, slopes, axis=0)
    y_query = hermite(t_query)
    spline = CubicSpline(times, y, axis=0)
    interp_err = float(np.max(np.abs(y_query - spline(t_query))))
    exact = np.isin(t_query, times)
    if exact.any():
        # sample hits: copy stored values so t = 0 reproduces the initial state exactly
        idx = np.searchsorted(times, t_query[exact])
        y_query[exact] = y[idx]
    lapse = pullback_lapse(y_query[:, 0], system.params.a, s, omega)
    return GlobalTrajectory(system, s, t_query, y_query, lapse, float(omega), interp_err)
