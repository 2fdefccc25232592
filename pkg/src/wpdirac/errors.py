"""Exception types raised by the solver."""


class InvalidParams(ValueError):
    """Model parameters violate a structural constraint (parity, m, P, epsilon)."""


class MissingDerivative(ValueError):
    """A curvature quantity was requested without the second t-derivative of f."""


class OutOfDomain(ValueError):
    """The closed-form warp factor is undefined at the requested time.

    Attributes
    ----------
    t_critical : float
        Time at which ``1 + (n - 2a) c t / 4`` vanishes. Callers can clamp an
        integration window to it.
    """

    def __init__(self, t, t_critical):
        self.t = t
        self.t_critical = t_critical
        super().__init__(
            f"t={t!r} lies outside the closed-form domain (critical time {t_critical!r})"
        )


class InadmissibleData(ValueError):
    """The initial-data radicand is negative, so no real f_t(0) exists."""

    def __init__(self, radicand, epsilon):
        self.radicand = radicand
        self.epsilon = epsilon
        super().__init__(
            f"initial-data radicand is negative ({radicand!r}) for epsilon={epsilon:+d}; "
            f"try epsilon={-epsilon:+d}"
        )


class WindowError(ValueError):
    """Requested reparametrization window exceeds the resolved trajectory window."""

    def __init__(self, omega, max_omega):
        self.omega = omega
        self.max_omega = max_omega
        super().__init__(
            f"omega={omega!r} exceeds the resolved window; maximum admissible omega is {max_omega!r}"
        )
