"""Exception types shared across the package."""


class DivergenceError(RuntimeError):
    """A state or derivative component became non-finite during integration."""

    def __init__(self, t: float, component: int, message: str | None = None):
        self.t = t
        self.component = component
        super().__init__(
            message
            or f"non-finite value in component {component} at t={t!r}"
        )


class OracleError(RuntimeError):
    """The eigenvalue iteration used by a test oracle failed to converge."""


class LyapunovError(ValueError):
    """Lyapunov solve failed: the system matrix is singular for the
    symmetric unknowns or the solution is not positive definite
    (typically because the input matrix is not Hurwitz)."""


class NumericError(RuntimeError):
    """A computed result violated its own accuracy contract."""
