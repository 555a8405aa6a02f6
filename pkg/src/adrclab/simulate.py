"""Closed-loop simulation: plant, observer, control law and ideal
trajectory integrated as one coupled vector field on a shared fixed-step
RK4 grid, plus bandwidth sweeps and the destabilising-uncertainty
falsification experiment.

The loop is stiff (observer error modes at -omega_o), so the step is capped
at 0.2/omega_o, keeping h*|lambda| well inside the RK4 real-axis stability
interval (~2.78). Divergence is a first-class result, not an error: the
falsification experiments intend to produce it.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np

from . import _fastsim
from .controller import ControllerConfig, compute_tu, ideal_derivative
from .observer import EsoGains, EsoState, eso_derivative, eso_gains
from .plant import (
    PlantConfig,
    ReferenceSpec,
    UncertaintySpec,
    eval_g,
    plant_derivative,
    reference_vector,
)
from .ratpoly import RationalLike
from .stability import PhiVector, is_well_performed

MAX_STEP = 1e-3
STIFFNESS_MARGIN = 0.2
SETTLE_FACTOR = 5.0
THREADS_ENV = "ADRC_LAB_THREADS"


def auto_step(omega_o: float) -> float:
    """Default integration step min(1e-3, 0.2/omega_o)."""
    return min(MAX_STEP, STIFFNESS_MARGIN / omega_o)


@dataclass(frozen=True)
class Scenario:
    """One closed-loop experiment: plant, controller, reference, observer
    initial state, horizon (duration from t0) and step (None = auto)."""

    plant: PlantConfig
    controller: ControllerConfig
    reference: ReferenceSpec
    eso_init: EsoState
    horizon: float
    step: float | None = None

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.controller.n != self.plant.n:
            raise ValueError(
                f"feedback gain has {self.controller.n} entries, plant order "
                f"is {self.plant.n}"
            )
        if self.eso_init.n != self.plant.n:
            raise ValueError(
                f"observer initial state has {self.eso_init.n} entries, "
                f"plant order is {self.plant.n}"
            )
        if self.step is not None:
            if self.step <= 0:
                raise ValueError(f"step must be positive, got {self.step}")
            if self.step * self.controller.omega_o > STIFFNESS_MARGIN * (1 + 1e-9):
                raise ValueError(
                    f"step {self.step} violates step*omega_o <= "
                    f"{STIFFNESS_MARGIN} at omega_o={self.controller.omega_o} "
                    "(RK4 stability for the observer modes)"
                )

    def resolved_step(self) -> float:
        if self.step is not None:
            return self.step
        return auto_step(self.controller.omega_o)


@dataclass
class SimResult:
    """Time series on a shared sample grid plus derived metrics.

    The truth series f equals g(X,t) + b_delta*u recomputed pointwise from
    the logged state and input. On divergence the series are truncated to
    the finite prefix and blowup_time records the first bad sample time.
    """

    times: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    fhat: np.ndarray
    f: np.ndarray
    u: np.ndarray
    xstar: np.ndarray
    t_u: float
    metrics: dict
    diverged: bool
    blowup_time: float | None


def combined_derivative(
    sc: Scenario, gains: EsoGains, t: float, state: Sequence[float], u: float
) -> np.ndarray:
    """Coupled vector field [plant; observer; ideal] for a given input u.

    Pure-Python reference path composed from the module operations; the
    compiled kernel mirrors it and is cross-checked in tests.
    """
    n = sc.plant.n
    x = np.asarray(state[:n])
    xhat = tuple(state[n: 2 * n])
    fhat = float(state[2 * n])
    xstar = np.asarray(state[2 * n + 1:])
    rvec, r_n, _ = reference_vector(sc.reference, t, n)
    dx = plant_derivative(sc.plant, x, u, t)
    deso = eso_derivative(EsoState(xhat, fhat), u, float(x[0]), gains,
                          sc.plant.b_bar)
    dstar = ideal_derivative(sc.controller.K, xstar, rvec, r_n)
    return np.concatenate([dx, deso.xhat, [deso.fhat], dstar])


def segment_plan(
    sc: Scenario, t_u: float
) -> list[tuple[float, float, int, bool]]:
    """Split [t0, t0+horizon] at the control switch time and at uncertainty
    kink times, so every RK4 segment integrates a smooth field and the grid
    lands on the breakpoints exactly. Returns (start, end, nsteps, active)
    tuples with per-segment step (end-start)/nsteps <= resolved step."""
    t0 = sc.controller.t0
    t_end = t0 + sc.horizon
    h = sc.resolved_step()
    points = {t0, t_end}
    if t0 < t_u < t_end:
        points.add(t_u)
    for kink in sc.plant.uncertainty.kink_times():
        if t0 < kink < t_end:
            points.add(kink)
    ordered = sorted(points)
    merged = [ordered[0]]
    for p in ordered[1:]:
        if p - merged[-1] > 1e-12:
            merged.append(p)
    plan = []
    for a, b in zip(merged[:-1], merged[1:]):
        ratio = (b - a) / h
        nsteps = max(1, round(ratio) if abs(ratio - round(ratio)) < 1e-6
                     else math.ceil(ratio))
        plan.append((a, b, nsteps, a >= t_u))
    return plan


def run_closed_loop(sc: Scenario) -> SimResult:
    """Single deterministic fixed-step RK4 integration of the combined
    (3n+1)-dimensional closed loop, with metric extraction."""
    n = sc.plant.n
    gains = eso_gains(sc.controller.phi, sc.controller.omega_o)
    t_u = compute_tu(sc.controller)
    plan = segment_plan(sc, t_u)
    total = sum(nsteps for _, _, nsteps, _ in plan)
    dim = 3 * n + 1
    times = np.empty(total + 1)
    states = np.empty((total + 1, dim))
    u_series = np.empty(total + 1)
    state = np.concatenate(
        [sc.plant.x0, sc.eso_init.xhat, [sc.eso_init.fhat], sc.plant.x0]
    )
    times[0] = sc.controller.t0
    states[0] = state
    g_kind = _fastsim.G_KIND_IDS[sc.plant.uncertainty.kind]
    spec = sc.plant.uncertainty
    gp = (spec.c, 0.0, 0.0) if spec.kind == "constant" else (
        spec.Mg, spec.wg, spec.phig)
    ref = sc.reference
    ref_kind = _fastsim.REF_KIND_IDS[ref.kind]
    ref_coeffs = np.asarray(ref.coeffs, dtype=float)
    k_arr = np.asarray(sc.controller.K, dtype=float)
    l_arr = np.asarray(gains.l, dtype=float)
    offset = 0
    diverged = False
    blowup_time = None
    m = total + 1
    for a, b, nsteps, active in plan:
        h_seg = (b - a) / nsteps
        bad = _fastsim.integrate_segment(
            state, a, h_seg, nsteps, active,
            n, sc.plant.b_bar, sc.plant.b_delta,
            g_kind, gp[0], gp[1], gp[2], k_arr, l_arr,
            ref_kind, ref.amp, ref.freq, ref_coeffs,
            times, states, u_series, offset,
        )
        if bad >= 0:
            diverged = True
            blowup_time = float(times[bad])
            m = bad
            break
        offset += nsteps
        # pin the shared boundary sample to the exact breakpoint
        # (t_start + nsteps*h can land 1 ulp off)
        times[offset] = b
    times = times[:m]
    states = states[:m]
    u_series = u_series[:m]
    x = states[:, :n]
    xhat = states[:, n: 2 * n]
    fhat = states[:, 2 * n]
    xstar = states[:, 2 * n + 1:]
    # Truth series from the logged state and input, by the scalar evaluator
    # so tests can reproduce it bit-for-bit.
    f = np.empty(m)
    b_delta = sc.plant.b_delta
    for k in range(m):
        f[k] = eval_g(spec, x[k], times[k]) + b_delta * u_series[k]
    metrics = _metrics(sc, gains, t_u, times, x, xhat, fhat, f, u_series,
                       xstar, diverged, blowup_time)
    return SimResult(times, x, xhat, fhat, f, u_series, xstar, t_u, metrics,
                     diverged, blowup_time)


def _metrics(sc, gains, t_u, times, x, xhat, fhat, f, u, xstar,
             diverged, blowup_time) -> dict:
    m = len(times)
    sup_track = None
    sup_est_post = None
    sup_f_est_post = None
    terminal_err = None
    if m:
        # Norms may overflow to inf on intentionally destabilised runs;
        # an infinite sup is an honest, meaningful outcome there.
        with np.errstate(over="ignore", invalid="ignore"):
            sup_track = float(np.sqrt(((x - xstar) ** 2).sum(axis=1)).max())
            settle = SETTLE_FACTOR / gains.omega_o
            mask = times >= t_u + settle
            if mask.any():
                est = np.sqrt(((x - xhat) ** 2).sum(axis=1) + (f - fhat) ** 2)
                sup_est_post = float(est[mask].max())
                sup_f_est_post = float(np.abs(f - fhat)[mask].max())
            if not diverged:
                rvec, _, _ = reference_vector(sc.reference, float(times[-1]),
                                              sc.plant.n)
                terminal_err = float(np.linalg.norm(x[-1] - rvec))
    return {
        "blowup_time": blowup_time,
        "diverged": diverged,
        "n_samples": m,
        "omega_o": gains.omega_o,
        "step": sc.resolved_step(),
        "sup_est_post": sup_est_post,
        "sup_f_est_post": sup_f_est_post,
        "sup_track": sup_track,
        "t_u": t_u,
        "terminal_err": terminal_err,
    }


def metrics_json(result: SimResult) -> str:
    """Canonical metrics serialisation: sorted keys, shortest round-trip
    floats, no timestamps. Non-finite values become the strings "inf",
    "-inf", "nan" so the output stays strict JSON."""
    safe = {}
    for key, value in result.metrics.items():
        if isinstance(value, float) and not math.isfinite(value):
            value = repr(value)
        safe[key] = value
    return json.dumps(safe, sort_keys=True, indent=2) + "\n"


def timeseries_csv_lines(result: SimResult, every: int = 1) -> Iterator[str]:
    """CSV rows t,x1..xn,xhat1..xhatn,fhat,f,u,xstar1..xstarn with shortest
    round-trip float formatting; ``every`` decimates the sample grid."""
    if every < 1:
        raise ValueError("every must be >= 1")
    n = result.x.shape[1]
    header = (
        "t,"
        + ",".join(f"x{i+1}" for i in range(n)) + ","
        + ",".join(f"xhat{i+1}" for i in range(n))
        + ",fhat,f,u,"
        + ",".join(f"xstar{i+1}" for i in range(n))
    )
    yield header
    for k in range(0, len(result.times), every):
        values = [
            result.times[k], *result.x[k], *result.xhat[k],
            result.fhat[k], result.f[k], result.u[k], *result.xstar[k],
        ]
        yield ",".join(repr(float(v)) for v in values)


@dataclass(frozen=True)
class SweepRow:
    omega_o: float
    metrics: dict


def omega_sweep(sc: Scenario, omegas: Sequence[float]) -> list[SweepRow]:
    """One metrics row per bandwidth, all other scenario fields preserved;
    the step resolves automatically per bandwidth. Per-row divergence is
    recorded in the metrics and the sweep continues. Rows are ordered by
    input order; ADRC_LAB_THREADS > 1 enables concurrent rows."""
    for w in omegas:
        if w <= 0:
            raise ValueError(f"omega_o must be positive, got {w}")

    def one(w: float) -> SweepRow:
        controller = replace(sc.controller, omega_o=float(w))
        sub = replace(sc, controller=controller, step=None)
        return SweepRow(float(w), run_closed_loop(sub).metrics)

    threads = int(os.environ.get(THREADS_ENV, "1") or "1")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, omegas))
    return [one(w) for w in omegas]


SWEEP_CSV_HEADER = (
    "omega_o,sup_track,sup_est_post,sup_f_est_post,terminal_err,"
    "diverged,blowup_time"
)


def sweep_csv_lines(rows: Sequence[SweepRow]) -> Iterator[str]:
    yield SWEEP_CSV_HEADER
    for row in rows:
        m = row.metrics
        fields = [repr(row.omega_o)]
        for key in ("sup_track", "sup_est_post", "sup_f_est_post",
                    "terminal_err"):
            fields.append("" if m[key] is None else repr(m[key]))
        fields.append("true" if m["diverged"] else "false")
        fields.append("" if m["blowup_time"] is None else repr(m["blowup_time"]))
        yield ",".join(fields)


def default_feedback(n: int) -> tuple[float, ...]:
    """Binomial pole placement at -2: the closed-loop characteristic
    polynomial is (s+2)^n; gives K=(4,4) for n=2."""
    return tuple(
        float(math.comb(n, n + 1 - i) * 2 ** (n + 1 - i))
        for i in range(1, n + 1)
    )


@dataclass(frozen=True)
class FalsificationRow:
    omega_o: float
    sup_track: float | None
    diverged: bool
    blowup_time: float | None

    @property
    def achieved(self) -> bool:
        return not self.diverged and self.sup_track is not None


@dataclass(frozen=True)
class FalsificationEvidence:
    """Per-bandwidth tracking error under the destabilising sinusoid; the
    tunability claim is refuted when no tested bandwidth brings sup_track
    below eps."""

    n: int
    ratio: float
    Mg: float
    wg: float
    phig: float
    eps: float
    rows: tuple[FalsificationRow, ...]
    refuted: bool


def falsification_run(
    n: int,
    phi: PhiVector,
    ratio: RationalLike,
    Mg: float,
    wg: float,
    phig: float,
    omegas: Sequence[float],
    eps: float = 0.1,
    horizon: float = 10.0,
    K: Sequence[float] | None = None,
) -> FalsificationEvidence:
    """Destabilising-uncertainty experiment for a gain ratio outside the
    tolerable interval: g = Mg*sin(wg*t + phig), zero reference, zero
    initial conditions (so the ideal trajectory is identically zero),
    swept across the given bandwidths.

    Raises ValueError when the ratio is actually inside the tolerable
    interval (the experiment is only meaningful outside it).
    """
    if phi.n != n:
        raise ValueError(f"phi has n={phi.n}, expected n={n}")
    if is_well_performed(phi, ratio):
        raise ValueError(
            f"ratio {ratio} is inside the tolerable gain interval for this "
            "phi; the falsification experiment requires an intolerable ratio"
        )
    gains_k = tuple(float(v) for v in (K if K is not None else default_feedback(n)))
    plant = PlantConfig(
        n=n, b_bar=1.0, b_delta=float(ratio),
        uncertainty=UncertaintySpec("sinusoid", Mg=float(Mg), wg=float(wg),
                                    phig=float(phig)),
        x0=(0.0,) * n,
    )
    controller = ControllerConfig(
        K=gains_k, b_bar=1.0, omega_o=float(omegas[0]), phi=phi,
        rho0=1e-6, t0=0.0,
    )
    sc = Scenario(
        plant=plant, controller=controller, reference=ReferenceSpec("zero"),
        eso_init=EsoState((0.0,) * n, 0.0), horizon=horizon, step=None,
    )
    sweep = omega_sweep(sc, omegas)
    rows = tuple(
        FalsificationRow(
            row.omega_o, row.metrics["sup_track"], row.metrics["diverged"],
            row.metrics["blowup_time"],
        )
        for row in sweep
    )
    refuted = all(
        row.diverged or row.sup_track is None or row.sup_track > eps
        for row in rows
    )
    return FalsificationEvidence(
        n=n, ratio=float(ratio), Mg=float(Mg), wg=float(wg), phig=float(phig),
        eps=float(eps), rows=rows, refuted=refuted,
    )
