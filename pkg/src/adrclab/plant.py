"""Uncertain integrator-chain plant: the shipped uncertainty library and
analytic reference-signal generators.

The plant is x_i' = x_{i+1}, x_n' = b_bar*u + g(X,t) + b_delta*u with
measured output y = x_1. Only the enumerated uncertainty kinds are
available, so their boundedness envelopes stay auditable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DivergenceError

UNCERTAINTY_KINDS = (
    "none", "case1", "case2", "case3", "case4", "sinusoid", "constant",
)
REFERENCE_KINDS = ("zero", "sinusoid", "polynomial")

# Times at which the piecewise case4 ramp changes branch; integration grids
# must land on these exactly to avoid smearing the kinks.
CASE4_KINKS = (5.0, 8.0)


@dataclass(frozen=True)
class UncertaintySpec:
    """Tagged union over the shipped uncertainty library.

    kind "sinusoid" is M_g*sin(w_g*t + phi_g) (state-independent, the
    destabilising probe of the falsification harness); "constant" is the
    fixed value c; case1..case4 are the four two-state study functions.
    """

    kind: str
    Mg: float = 0.0
    wg: float = 0.0
    phig: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in UNCERTAINTY_KINDS:
            raise ValueError(
                f"unknown uncertainty kind {self.kind!r}; "
                f"expected one of {UNCERTAINTY_KINDS}"
            )

    def kink_times(self) -> tuple[float, ...]:
        return CASE4_KINKS if self.kind == "case4" else ()

    def to_json_dict(self) -> dict:
        if self.kind == "sinusoid":
            return {"kind": "sinusoid", "Mg": self.Mg, "wg": self.wg,
                    "phig": self.phig}
        if self.kind == "constant":
            return {"kind": "constant", "c": self.c}
        return {"kind": self.kind}


def uncertainty_from_json(data: dict) -> UncertaintySpec:
    if not isinstance(data, dict) or "kind" not in data:
        raise ValueError("uncertainty must be an object with a 'kind' field")
    kind = data["kind"]
    allowed = {"kind"}
    if kind == "sinusoid":
        allowed |= {"Mg", "wg", "phig"}
    elif kind == "constant":
        allowed |= {"c"}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(
            f"unknown field(s) {sorted(unknown)} in uncertainty of kind {kind!r}"
        )
    if kind == "sinusoid":
        return UncertaintySpec(
            "sinusoid",
            Mg=float(data.get("Mg", 0.0)),
            wg=float(data.get("wg", 0.0)),
            phig=float(data.get("phig", 0.0)),
        )
    if kind == "constant":
        return UncertaintySpec("constant", c=float(data.get("c", 0.0)))
    return UncertaintySpec(kind)


def eval_g(spec: UncertaintySpec, x: Sequence[float], t: float) -> float:
    """Evaluate the uncertainty g(X, t).

    case1..case4 are defined for two-state plants only; requesting them with
    a different state dimension raises ValueError.
    """
    kind = spec.kind
    if kind == "none":
        return 0.0
    if kind == "sinusoid":
        return spec.Mg * math.sin(spec.wg * t + spec.phig)
    if kind == "constant":
        return spec.c
    if len(x) != 2:
        raise ValueError(f"{kind} is defined for n=2, got state length {len(x)}")
    x1 = x[0]
    x2 = x[1]
    if kind == "case1":
        return 3.0 * x1 + 3.0 * x2
    if kind == "case2":
        return 3.0 * x1 + x1 * x1 + 3.0 * x2 + x2 * x2
    if kind == "case3":
        return 0.4 * math.sin(x1) + 10.0 * math.sin(math.pi * t / 8.0)
    # case4: piecewise ramp, continuous at t=5 and t=8
    if t < 5.0:
        return 0.1 * x1
    if t < 8.0:
        return 0.1 * x1 + 10.0 * (t - 5.0) / 3.0
    return 0.1 * x1 + 10.0


@dataclass(frozen=True)
class PlantConfig:
    """Integrator chain of order n driven by b_bar*u + g(X,t) + b_delta*u."""

    n: int
    b_bar: float
    b_delta: float
    uncertainty: UncertaintySpec
    x0: tuple[float, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"plant order must be >= 1, got {self.n}")
        if self.b_bar == 0:
            raise ValueError("nominal gain b_bar must be nonzero")
        if len(self.x0) != self.n:
            raise ValueError(
                f"x0 has length {len(self.x0)}, expected n={self.n}"
            )
        if self.uncertainty.kind.startswith("case") and self.n != 2:
            raise ValueError(
                f"uncertainty {self.uncertainty.kind} requires n=2, got n={self.n}"
            )


def plant_derivative(
    cfg: PlantConfig, x: Sequence[float], u: float, t: float
) -> np.ndarray:
    """State derivative of the uncertain plant; linear in u with slope
    exactly b_bar + b_delta."""
    out = np.empty(cfg.n)
    for i in range(cfg.n - 1):
        out[i] = x[i + 1]
    g = eval_g(cfg.uncertainty, x, t)
    out[cfg.n - 1] = cfg.b_bar * u + g + cfg.b_delta * u
    if not np.isfinite(out).all():
        bad = int(np.argmin(np.isfinite(out)))
        raise DivergenceError(t, bad)
    return out


@dataclass(frozen=True)
class ReferenceSpec:
    """Reference signal r(t) with analytic derivatives of every order.

    Kinds: "zero"; "sinusoid" r = amp*sin(freq*t); "polynomial" with
    ascending coefficients. No numeric differentiation anywhere.
    """

    kind: str
    amp: float = 0.0
    freq: float = 0.0
    coeffs: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in REFERENCE_KINDS:
            raise ValueError(
                f"unknown reference kind {self.kind!r}; "
                f"expected one of {REFERENCE_KINDS}"
            )

    def to_json_dict(self) -> dict:
        if self.kind == "sinusoid":
            return {"kind": "sinusoid", "amp": self.amp, "freq": self.freq}
        if self.kind == "polynomial":
            return {"kind": "polynomial", "coeffs": list(self.coeffs)}
        return {"kind": "zero"}


def reference_from_json(data: dict) -> ReferenceSpec:
    if not isinstance(data, dict) or "kind" not in data:
        raise ValueError("reference must be an object with a 'kind' field")
    kind = data["kind"]
    allowed = {"kind"}
    if kind == "sinusoid":
        allowed |= {"amp", "freq"}
    elif kind == "polynomial":
        allowed |= {"coeffs"}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(
            f"unknown field(s) {sorted(unknown)} in reference of kind {kind!r}"
        )
    if kind == "sinusoid":
        return ReferenceSpec("sinusoid", amp=float(data.get("amp", 0.0)),
                             freq=float(data.get("freq", 0.0)))
    if kind == "polynomial":
        coeffs = data.get("coeffs", [])
        if not isinstance(coeffs, list):
            raise ValueError("polynomial reference 'coeffs' must be a list")
        return ReferenceSpec("polynomial", coeffs=tuple(float(c) for c in coeffs))
    return ReferenceSpec("zero")


def _derivative(spec: ReferenceSpec, t: float, k: int) -> float:
    """k-th derivative of r at time t, analytically."""
    if spec.kind == "zero":
        return 0.0
    if spec.kind == "sinusoid":
        return spec.amp * spec.freq**k * math.sin(spec.freq * t + k * math.pi / 2.0)
    acc = 0.0
    for j in range(k, len(spec.coeffs)):
        factor = 1.0
        for m in range(j, j - k, -1):
            factor *= m
        acc += spec.coeffs[j] * factor * t ** (j - k)
    return acc


def reference_vector(
    spec: ReferenceSpec, t: float, n: int
) -> tuple[np.ndarray, float, float]:
    """Return ([r, r', ..., r^(n-1)], r^(n), r^(n+1)) at time t."""
    rvec = np.array([_derivative(spec, t, k) for k in range(n)])
    return rvec, _derivative(spec, t, n), _derivative(spec, t, n + 1)
