"""Extended-state observer: estimates the plant state together with the
lumped total disturbance f = g(X,t) + b_delta*u as one extra state, from the
measured output y = x_1 only."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError
from .stability import PhiVector

# Gains are plain floats; the headroom bound keeps l_{n+1} = phi_{n+1} *
# omega_o^{n+1} far from double overflow even after squaring in inner
# products (double max ~1.8e308).
GAIN_HEADROOM = 1e150


@dataclass(frozen=True)
class EsoState:
    """Observer state: n-vector estimate xhat plus scalar disturbance
    estimate fhat."""

    xhat: tuple[float, ...]
    fhat: float

    @property
    def n(self) -> int:
        return len(self.xhat)


@dataclass(frozen=True)
class EsoGains:
    """Injection gains l_i = phi_i * omega_o^i for bandwidth omega_o > 0."""

    l: tuple[float, ...]
    omega_o: float


def eso_gains(phi: PhiVector, omega_o: float) -> EsoGains:
    if omega_o <= 0:
        raise ValueError(f"omega_o must be positive, got {omega_o}")
    gains = tuple(
        float(phi.phi[i]) * omega_o ** (i + 1) for i in range(len(phi.phi))
    )
    if not all(math.isfinite(g) for g in gains) or gains[-1] > GAIN_HEADROOM:
        raise ValueError(
            f"observer gains overflow double headroom at omega_o={omega_o} "
            f"(l_{len(gains)} = {gains[-1]:.3e})"
        )
    return EsoGains(gains, float(omega_o))


def eso_derivative(
    s: EsoState, u: float, y: float, gains: EsoGains, b_bar: float
) -> EsoState:
    """Observer state derivative driven by the output innovation xhat_1 - y.

    Componentwise: xhat_i' = xhat_{i+1} - l_i (xhat_1 - y) for i < n,
    xhat_n' = fhat + b_bar*u - l_n (xhat_1 - y), fhat' = -l_{n+1} (xhat_1 - y).
    Consumes only the measured output, never the full plant state.
    """
    n = s.n
    e = s.xhat[0] - y
    dx = [0.0] * n
    for i in range(n - 1):
        dx[i] = s.xhat[i + 1] - gains.l[i] * e
    dx[n - 1] = s.fhat + b_bar * u - gains.l[n - 1] * e
    df = -gains.l[n] * e
    for i, v in enumerate(dx + [df]):
        if not math.isfinite(v):
            raise DivergenceError(float("nan"), i)
    return EsoState(tuple(dx), df)


def error_matrix(gains: EsoGains) -> np.ndarray:
    """Observer error system matrix (companion form with -l_i in the first
    column); Hurwitz whenever the phi base polynomial is."""
    m = len(gains.l)
    a = np.zeros((m, m))
    for i in range(m):
        a[i, 0] = -gains.l[i]
        if i < m - 1:
            a[i, i + 1] = 1.0
    return a
