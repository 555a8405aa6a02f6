"""Disturbance-rejection control law: cancels the estimated total
disturbance and applies pole-placing feedback on the estimated state, gated
by the peaking time t_u; also the ideal (disturbance-free) trajectory
generator used as the tracking benchmark."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import solve_lyapunov, spectral_norm
from .ratpoly import HurwitzVerdict, Polynomial, as_fraction, routh_hurwitz
from .stability import PhiVector, build_a1


def validate_feedback(k: Sequence[float]) -> HurwitzVerdict:
    """Hurwitz verdict on the closed-loop characteristic polynomial
    s^n + k_n s^{n-1} + ... + k_1 of the pole-placed chain."""
    if len(k) < 1:
        raise ValueError("feedback gain needs at least one entry")
    coeffs = [as_fraction(1)] + [as_fraction(v) for v in reversed(k)]
    return routh_hurwitz(Polynomial(coeffs))


@dataclass(frozen=True)
class ControllerConfig:
    """Feedback gain, nominal input gain, observer bandwidth and
    coefficients, plus the initial-estimate bound rho0 feeding the peaking
    gate. The feedback gain must place all closed-loop poles strictly in
    the left half-plane (checked here)."""

    K: tuple[float, ...]
    b_bar: float
    omega_o: float
    phi: PhiVector
    rho0: float
    t0: float = 0.0

    def __post_init__(self):
        if self.b_bar == 0:
            raise ValueError("nominal gain b_bar must be nonzero")
        if self.omega_o <= 0:
            raise ValueError(f"omega_o must be positive, got {self.omega_o}")
        if self.rho0 <= 0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        verdict = validate_feedback(self.K)
        if not verdict.stable:
            raise ValueError(
                "feedback gain K does not stabilise the chain "
                f"({verdict.failure_reason} at s^{verdict.failure_power})"
            )

    @property
    def n(self) -> int:
        return len(self.K)


def compute_tu(cfg: ControllerConfig) -> float:
    """Peaking gate: the control stays zero until

        t_u = t0 + 2(n-1) * ||P1|| * max(ln(omega_o * rho0) / omega_o, 0)

    where P1 solves the Lyapunov equation for the phi companion matrix and
    ||P1|| is its spectral norm. Returns t0 exactly when n = 1 or
    omega_o * rho0 <= 1.
    """
    if cfg.n == 1 or cfg.omega_o * cfg.rho0 <= 1.0:
        return cfg.t0
    p1 = solve_lyapunov(build_a1(cfg.phi))
    norm = spectral_norm(p1)
    return cfg.t0 + 2.0 * (cfg.n - 1) * norm * (
        math.log(cfg.omega_o * cfg.rho0) / cfg.omega_o
    )


def control_law(
    cfg: ControllerConfig,
    t: float,
    t_u: float,
    xhat: Sequence[float],
    fhat: float,
    r_vec: Sequence[float],
    r_n: float,
) -> float:
    """Control input: exactly 0 before t_u (so observer peaking is never
    injected), afterwards

        u = (-fhat - K . (xhat - R) + r^(n)) / b_bar.

    The compensation divides by the nominal gain only; the mismatch against
    the true gain is exactly the uncertainty under study.
    """
    if t < t_u:
        return 0.0
    acc = 0.0
    for i in range(cfg.n):
        acc += cfg.K[i] * (xhat[i] - r_vec[i])
    return (-fhat - acc + r_n) / cfg.b_bar


def ideal_derivative(
    k: Sequence[float],
    xstar: Sequence[float],
    r_vec: Sequence[float],
    r_n: float,
) -> np.ndarray:
    """Derivative of the ideal trajectory: the chain under exact
    pole-placed feedback -K.(X* - R) + r^(n), with no disturbance and no
    estimation error. Started from the plant's initial state by the
    simulator."""
    n = len(k)
    out = np.empty(n)
    for i in range(n - 1):
        out[i] = xstar[i + 1]
    acc = 0.0
    for i in range(n):
        acc += k[i] * (xstar[i] - r_vec[i])
    out[n - 1] = -acc + r_n
    return out
