"""numba-compiled closed-loop integrator core.

The kernel mirrors ``simulate.combined_derivative`` (same formulas, same
operation order); the test suite cross-checks the two paths on identical
grids. State layout: [X (n), Xhat (n), fhat, Xstar (n)], dimension 3n+1.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

G_KIND_IDS = {
    "none": 0,
    "case1": 1,
    "case2": 2,
    "case3": 3,
    "case4": 4,
    "sinusoid": 5,
    "constant": 6,
}

REF_KIND_IDS = {"zero": 0, "sinusoid": 1, "polynomial": 2}


@njit(cache=True, nogil=True)
def _eval_g(kind, p0, p1, p2, s, t):
    if kind == 0:
        return 0.0
    if kind == 5:
        return p0 * math.sin(p1 * t + p2)
    if kind == 6:
        return p0
    x1 = s[0]
    x2 = s[1]
    if kind == 1:
        return 3.0 * x1 + 3.0 * x2
    if kind == 2:
        return 3.0 * x1 + x1 * x1 + 3.0 * x2 + x2 * x2
    if kind == 3:
        return 0.4 * math.sin(x1) + 10.0 * math.sin(math.pi * t / 8.0)
    # case4
    if t < 5.0:
        return 0.1 * x1
    if t < 8.0:
        return 0.1 * x1 + 10.0 * (t - 5.0) / 3.0
    return 0.1 * x1 + 10.0


@njit(cache=True, nogil=True)
def _ref_derivative(kind, amp, freq, coeffs, t, k):
    if kind == 0:
        return 0.0
    if kind == 1:
        return amp * freq**k * math.sin(freq * t + k * math.pi / 2.0)
    acc = 0.0
    for j in range(k, len(coeffs)):
        factor = 1.0
        for m in range(j, j - k, -1):
            factor *= m
        acc += coeffs[j] * factor * t ** (j - k)
    return acc


@njit(cache=True, nogil=True)
def _ref_fill(kind, amp, freq, coeffs, t, n, rbuf):
    for k in range(n):
        rbuf[k] = _ref_derivative(kind, amp, freq, coeffs, t, k)
    return _ref_derivative(kind, amp, freq, coeffs, t, n)


@njit(cache=True, nogil=True)
def _control(s, n, b_bar, K, rbuf, r_n, active):
    if not active:
        return 0.0
    acc = 0.0
    for i in range(n):
        acc += K[i] * (s[n + i] - rbuf[i])
    return (-s[2 * n] - acc + r_n) / b_bar


@njit(cache=True, nogil=True)
def _deriv(t, s, u, out, n, b_bar, b_delta,
           g_kind, gp0, gp1, gp2, K, L, rbuf, r_n):
    # plant chain
    for i in range(n - 1):
        out[i] = s[i + 1]
    g = _eval_g(g_kind, gp0, gp1, gp2, s, t)
    out[n - 1] = b_bar * u + g + b_delta * u
    # observer driven by the output innovation
    e = s[n] - s[0]
    for i in range(n - 1):
        out[n + i] = s[n + i + 1] - L[i] * e
    out[2 * n - 1] = s[2 * n] + b_bar * u - L[n - 1] * e
    out[2 * n] = -L[n] * e
    # ideal trajectory under exact pole-placed feedback
    for i in range(n - 1):
        out[2 * n + 1 + i] = s[2 * n + 2 + i]
    acc = 0.0
    for i in range(n):
        acc += K[i] * (s[2 * n + 1 + i] - rbuf[i])
    out[3 * n] = -acc + r_n


@njit(cache=True, nogil=True)
def integrate_segment(state, t_start, h, nsteps, active,
                      n, b_bar, b_delta, g_kind, gp0, gp1, gp2, K, L,
                      ref_kind, ref_amp, ref_freq, ref_coeffs,
                      out_t, out_s, out_u, offset):
    """Integrate one smooth segment with nsteps RK4 steps of size h.

    The caller has already recorded the sample at index ``offset``; this
    fills samples offset+1 .. offset+nsteps and the control series at
    offset .. offset+nsteps. ``active`` selects the control law for the
    whole segment (segments never straddle the switching time). Returns -1
    on success, else the sample index at which the state went non-finite.
    """
    dim = 3 * n + 1
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    stage = np.empty(dim)
    rbuf = np.empty(n)
    for k in range(nsteps):
        t = t_start + k * h
        r_n = _ref_fill(ref_kind, ref_amp, ref_freq, ref_coeffs, t, n, rbuf)
        u = _control(state, n, b_bar, K, rbuf, r_n, active)
        out_u[offset + k] = u
        _deriv(t, state, u, k1, n, b_bar, b_delta,
               g_kind, gp0, gp1, gp2, K, L, rbuf, r_n)
        th = t + 0.5 * h
        for i in range(dim):
            stage[i] = state[i] + 0.5 * h * k1[i]
        r_nh = _ref_fill(ref_kind, ref_amp, ref_freq, ref_coeffs, th, n, rbuf)
        u2 = _control(stage, n, b_bar, K, rbuf, r_nh, active)
        _deriv(th, stage, u2, k2, n, b_bar, b_delta,
               g_kind, gp0, gp1, gp2, K, L, rbuf, r_nh)
        for i in range(dim):
            stage[i] = state[i] + 0.5 * h * k2[i]
        u3 = _control(stage, n, b_bar, K, rbuf, r_nh, active)
        _deriv(th, stage, u3, k3, n, b_bar, b_delta,
               g_kind, gp0, gp1, gp2, K, L, rbuf, r_nh)
        t1 = t_start + (k + 1) * h
        for i in range(dim):
            stage[i] = state[i] + h * k3[i]
        r_n1 = _ref_fill(ref_kind, ref_amp, ref_freq, ref_coeffs, t1, n, rbuf)
        u4 = _control(stage, n, b_bar, K, rbuf, r_n1, active)
        _deriv(t1, stage, u4, k4, n, b_bar, b_delta,
               g_kind, gp0, gp1, gp2, K, L, rbuf, r_n1)
        for i in range(dim):
            state[i] = state[i] + (h / 6.0) * (
                k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]
            )
        idx = offset + 1 + k
        out_t[idx] = t1
        bad = False
        for i in range(dim):
            out_s[idx, i] = state[i]
            if not math.isfinite(state[i]):
                bad = True
        if bad:
            return idx
    t_end = t_start + nsteps * h
    r_n = _ref_fill(ref_kind, ref_amp, ref_freq, ref_coeffs, t_end, n, rbuf)
    out_u[offset + nsteps] = _control(state, n, b_bar, K, rbuf, r_n, active)
    return -1
