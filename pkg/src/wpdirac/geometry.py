"""Closed-form geometry of warped products ``e^f g_M + e^{af} dt^2`` over a base M^n.

The base manifold is summarized by its dimension n, the Killing parameter
lambda_M of its spinor, the spinor norm P and the resulting scalar curvature
S_g. Everything here is a pure function of those scalars and of (f, f_t, f_tt)
at a single time. Functions accept plain floats or numpy arrays of matching
shape for the sample fields.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import InvalidParams, MissingDerivative, OutOfDomain

__all__ = [
    "Parity",
    "ModelParams",
    "GeometrySample",
    "SecondFundamentalForm",
    "Curvature",
    "WarpProfile",
    "exp",
    "base_scalar_curvature",
    "second_fundamental_form",
    "curvature",
    "closed_form_f",
    "closed_form_scalar",
    "warp_hypothesis_residuals",
]


def exp(x):
    """``math.exp`` for scalars (raises OverflowError), ``np.exp`` for arrays."""
    if isinstance(x, (float, int)):
        return math.exp(x)
    return np.exp(x)


class Parity(enum.Enum):
    EVEN = "even"  # n = 2m, total dimension 2m + 1
    ODD = "odd"  # n = 2m - 1, total dimension 2m

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidParams(f"parity must be 'even' or 'odd', got {value!r}") from None


@dataclass(frozen=True)
class ModelParams:
    """Reduced problem data.

    Parameters
    ----------
    parity : Parity
        ``EVEN`` for slices of dimension n = 2m, ``ODD`` for n = 2m - 1.
    m : int
        Half-dimension parameter; at least 2 in the odd case.
    a : float
        Warp exponent of the dt^2 coefficient.
    lambda_M : float
        Killing parameter of the base spinor. The Killing number is
        ``-lambda_M / n``; zero means a parallel spinor.
    lambda_Q : float
        Dirac eigenvalue of the evolved spinor.
    epsilon : int
        Sign (+1 or -1) in front of the energy-momentum tensor.
    P : float
        Constant norm-square of the base spinor, > 0.
    """

    parity: Parity
    m: int
    a: float = 0.0
    lambda_M: float = 0.0
    lambda_Q: float = 0.0
    epsilon: int = 1
    P: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "parity", Parity.parse(self.parity))
        if int(self.m) != self.m:
            raise InvalidParams(f"m must be an integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        min_m = 1 if self.parity is Parity.EVEN else 2
        if self.m < min_m:
            raise InvalidParams(f"m must be >= {min_m} for {self.parity.value} parity, got {self.m}")
        if self.epsilon not in (1, -1):
            raise InvalidParams(f"epsilon must be +1 or -1, got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", int(self.epsilon))
        for name in ("a", "lambda_M", "lambda_Q", "P"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParams(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if not self.P > 0:
            raise InvalidParams(f"P must be positive, got {self.P!r}")

    @property
    def n(self) -> int:
        return 2 * self.m if self.parity is Parity.EVEN else 2 * self.m - 1

    @property
    def is_even(self) -> bool:
        return self.parity is Parity.EVEN

    def to_dict(self) -> dict:
        return {
            "parity": self.parity.value,
            "m": self.m,
            "a": self.a,
            "lambda_M": self.lambda_M,
            "lambda_Q": self.lambda_Q,
            "epsilon": self.epsilon,
            "P": self.P,
        }


@dataclass(frozen=True)
class GeometrySample:
    """Warp factor and its t-derivatives at one time."""

    f: float
    f_t: float
    f_tt: Optional[float] = None


class SecondFundamentalForm(NamedTuple):
    ii_coeff: float  # II(V, W) = ii_coeff * eta(V, W)
    tr_ii: float
    tr_ii_sq: float
    dtt_ii_coeff: Optional[float]


class Curvature(NamedTuple):
    ric_tan_coeff: float  # Ric(V, W) = ric_tan_coeff * eta(V, W), base part included
    ric_normal: float
    scalar: float
    slice_scalar: float


class WarpProfile(NamedTuple):
    f: float
    f_t: float
    f_tt: float
    f_ttt: float


def base_scalar_curvature(params: ModelParams) -> float:
    """Scalar curvature of the Einstein base carrying a real Killing spinor.

    A Killing spinor with Killing number ``mu = -lambda_M / n`` forces
    ``S_g = 4 n (n - 1) mu^2``. This is also the only value for which the
    standard initial data satisfy the Hamiltonian constraint.
    """
    n = params.n
    return 4.0 * (n - 1) * params.lambda_M**2 / n


def second_fundamental_form(
    sample: GeometrySample, params: ModelParams, derivative: bool = False
) -> SecondFundamentalForm:
    """Second fundamental form of the t-slices and its traces.

    ``dtt_ii_coeff`` is the eta-coefficient of the covariant t-derivative of
    II; it is computed whenever ``sample.f_tt`` is given, and required when
    ``derivative`` is true.
    """
    n, a = params.n, params.a
    f, f_t, f_tt = sample.f, sample.f_t, sample.f_tt
    if derivative and f_tt is None:
        raise MissingDerivative("dtt_ii_coeff requires f_tt")
    warp = exp(-(a / 2.0 - 1.0) * f)
    ii_coeff = -0.5 * warp * f_t
    tr_ii = -0.5 * n * exp(-0.5 * a * f) * f_t
    tr_ii_sq = 0.25 * n * exp(-a * f) * f_t * f_t
    dtt = None
    if f_tt is not None:
        dtt = -0.5 * warp * f_tt + 0.25 * (a - 2.0) * warp * f_t * f_t
    return SecondFundamentalForm(ii_coeff, tr_ii, tr_ii_sq, dtt)


def curvature(sample: GeometrySample, params: ModelParams) -> Curvature:
    """Ricci and scalar curvature of the warped product.

    The base is taken Einstein, ``Ric_g = (S_g / n) g``. The mixed component
    Ric(V, F) vanishes identically and is not returned.
    """
    if sample.f_tt is None:
        raise MissingDerivative("curvature requires f_tt")
    n, a = params.n, params.a
    f, f_t, f_tt = sample.f, sample.f_t, sample.f_tt
    s_g = base_scalar_curvature(params)
    ft2 = f_t * f_t
    damp = exp(-(a - 1.0) * f)
    lapse_inv = exp(-a * f)
    ric_tan = s_g / n + damp * (-0.5 * f_tt + 0.25 * (a - n) * ft2)
    ric_normal = lapse_inv * (-0.5 * n * f_tt + 0.25 * n * (a - 1.0) * ft2)
    slice_scalar = exp(-f) * s_g
    scalar = slice_scalar + lapse_inv * (-n * f_tt + 0.25 * n * (2.0 * a - n - 1.0) * ft2)
    return Curvature(ric_tan, ric_normal, scalar, slice_scalar)


def _log_branch(params: ModelParams) -> Optional[float]:
    """Return ``n - 2a`` for the logarithmic family, None when ``a = n/2``."""
    d = params.n - 2.0 * params.a
    return None if abs(d) <= 1e-12 else d


def _domain_factor(d: float, c: float, t: float) -> float:
    u = 1.0 + d * c * t / 4.0
    if not u > 0:
        raise OutOfDomain(t, -4.0 / (d * c))
    return u


def closed_form_f(params: ModelParams, c: float, t: float) -> WarpProfile:
    """Warp factor with ``4 f_tt + (n - 2a) f_t^2 = 0``, ``f(0) = 0``, ``f_t(0) = c``.

    Raises
    ------
    OutOfDomain
        If ``1 + (n - 2a) c t / 4 <= 0``; carries the critical time.
    """
    d = _log_branch(params)
    if d is None:
        return WarpProfile(c * t, c, 0.0, 0.0)
    u = _domain_factor(d, c, t)
    return WarpProfile(
        4.0 / d * math.log(u),
        c / u,
        -d * c * c / (4.0 * u * u),
        d * d * c**3 / (8.0 * u**3),
    )


def closed_form_scalar(params: ModelParams, c: float, t: float) -> float:
    """Scalar curvature of the closed-form metric over a flat base; never positive."""
    n = params.n
    d = _log_branch(params)
    if d is None:
        return -0.25 * n * c * c * math.exp(-0.5 * n * c * t)
    u = _domain_factor(d, c, t)
    return -0.25 * n * c * c * u ** (-2.0 * n / d)


def warp_hypothesis_residuals(sample: GeometrySample, f_ttt: float, params: ModelParams):
    """Residuals (A, B) of the metric conditions under which the weak Killing
    equation reduces to a parallel-transport system.

    ``A = 4 f_tt + (n - 2a) f_t^2`` and
    ``B = 8 f_ttt - 4 (4a - 2n - 1) f_t f_tt + (2a - n)(2a - n - 1) f_t^3``.
    A = 0 implies B = 0.
    """
    if sample.f_tt is None:
        raise MissingDerivative("residuals require f_tt")
    n, a = params.n, params.a
    f_t, f_tt = sample.f_t, sample.f_tt
    A = 4.0 * f_tt + (n - 2.0 * a) * f_t * f_t
    B = (
        8.0 * f_ttt
        - 4.0 * (4.0 * a - 2.0 * n - 1.0) * f_t * f_tt
        + (2.0 * a - n) * (2.0 * a - n - 1.0) * f_t**3
    )
    return A, B
