"""Small dense floating-point kernels: companion eigenvalue test, Lyapunov
solve, symmetric spectral norm, and the classic RK4 step."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import DivergenceError, LyapunovError, NumericError, OracleError
from .ratpoly import SIGN_CHANGE, HurwitzVerdict, Polynomial

EIG_MARGIN = 1e-9
LYAPUNOV_RESIDUAL_TOL = 1e-10
JACOBI_TOL = 1e-12


def companion_matrix(p: Polynomial) -> np.ndarray:
    """Companion matrix of ``p`` (monic-normalised), as floats."""
    if p.degree < 1:
        raise ValueError("companion matrix needs degree >= 1")
    lead = p.coeffs[0]
    a = [float(c / lead) for c in p.coeffs[1:]]
    m = p.degree
    comp = np.zeros((m, m))
    comp[1:, :-1] = np.eye(m - 1)
    comp[:, -1] = [-a[m - 1 - i] for i in range(m)]
    return comp


def hurwitz_eig_oracle(p: Polynomial) -> HurwitzVerdict:
    """Decide Hurwitzness from the eigenvalues of the companion matrix.

    Float-based; intended as an independent cross-check of routh_hurwitz in
    tests, never for production stability decisions. Stable iff the largest
    eigenvalue real part is below -1e-9.
    """
    if p.degree < 1:
        raise ValueError("hurwitz_eig_oracle requires degree >= 1")
    if p.coeffs[0] <= 0:
        raise ValueError("hurwitz_eig_oracle requires a positive leading coefficient")
    try:
        eig = np.linalg.eigvals(companion_matrix(p))
    except np.linalg.LinAlgError as exc:
        raise OracleError(f"eigenvalue iteration did not converge: {exc}") from exc
    if eig.real.max() < -EIG_MARGIN:
        return HurwitzVerdict(True)
    return HurwitzVerdict(False, SIGN_CHANGE)


def solve_lyapunov(a: np.ndarray) -> np.ndarray:
    """Solve A^T P + P A = -I for symmetric positive-definite P.

    The m(m+1)/2 unknowns of the symmetric P are assembled into one dense
    linear system and solved by LU with partial pivoting; the residual is
    verified to max-norm 1e-10. Raises LyapunovError when A is not Hurwitz
    (singular system or indefinite P) and NumericError if the residual
    contract fails.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("solve_lyapunov requires a square matrix")
    m = a.shape[0]
    idx = {}
    for i in range(m):
        for j in range(i, m):
            idx[(i, j)] = len(idx)
    dim = len(idx)
    system = np.zeros((dim, dim))
    rhs = np.zeros(dim)
    row = 0
    for r in range(m):
        for c in range(r, m):
            # (A^T P + P A)[r, c] = sum_k A[k, r] P[k, c] + P[r, k] A[k, c]
            for k in range(m):
                system[row, idx[(min(k, c), max(k, c))]] += a[k, r]
                system[row, idx[(min(r, k), max(r, k))]] += a[k, c]
            rhs[row] = -1.0 if r == c else 0.0
            row += 1
    try:
        z = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise LyapunovError(f"Lyapunov system is singular (A not Hurwitz?): {exc}") from exc
    p = np.zeros((m, m))
    for (i, j), k in idx.items():
        p[i, j] = z[k]
        p[j, i] = z[k]
    residual = a.T @ p + p @ a + np.eye(m)
    if np.abs(residual).max() > LYAPUNOV_RESIDUAL_TOL:
        raise NumericError(
            f"Lyapunov residual {np.abs(residual).max():.3e} exceeds "
            f"{LYAPUNOV_RESIDUAL_TOL:.0e}"
        )
    try:
        np.linalg.cholesky(p)
    except np.linalg.LinAlgError as exc:
        raise LyapunovError("Lyapunov solution is not positive definite "
                            "(A not Hurwitz?)") from exc
    return p


def spectral_norm(p: np.ndarray) -> float:
    """Largest |eigenvalue| of a symmetric matrix via cyclic Jacobi
    rotations (absolute off-diagonal tolerance 1e-12)."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError("spectral_norm requires a square matrix")
    if np.abs(p - p.T).max() > JACOBI_TOL:
        raise ValueError("spectral_norm requires a symmetric matrix "
                         f"(skew {np.abs(p - p.T).max():.3e} > {JACOBI_TOL:.0e})")
    a = 0.5 * (p + p.T)
    m = a.shape[0]
    if m == 1:
        return abs(a[0, 0])
    for _ in range(100):
        off = math.sqrt(max(0.0, (a * a).sum() - (np.diag(a) ** 2).sum()))
        if off <= JACOBI_TOL:
            break
        for r in range(m - 1):
            for c in range(r + 1, m):
                if abs(a[r, c]) <= JACOBI_TOL / (m * m):
                    continue
                theta = (a[c, c] - a[r, r]) / (2.0 * a[r, c])
                t = math.copysign(1.0, theta) / (
                    abs(theta) + math.sqrt(1.0 + theta * theta)
                )
                cos = 1.0 / math.sqrt(1.0 + t * t)
                sin = t * cos
                rot = np.eye(m)
                rot[r, r] = cos
                rot[c, c] = cos
                rot[r, c] = sin
                rot[c, r] = -sin
                a = rot.T @ a @ rot
    return float(np.abs(np.diag(a)).max())


def rk4_step(
    deriv: Callable[[float, np.ndarray], Sequence[float]],
    t: float,
    x: Sequence[float],
    h: float,
) -> np.ndarray:
    """One classic fourth-order Runge-Kutta update of x' = deriv(t, x).

    Deterministic for identical inputs. Raises DivergenceError carrying the
    stage time and offending component index when a derivative value is
    non-finite.
    """
    if h <= 0:
        raise ValueError("rk4_step requires h > 0")
    x = np.asarray(x, dtype=float)

    def eval_deriv(ts: float, xs: np.ndarray) -> np.ndarray:
        d = np.asarray(deriv(ts, xs), dtype=float)
        if not np.isfinite(d).all():
            bad = int(np.argmin(np.isfinite(d)))
            raise DivergenceError(ts, bad)
        return d

    k1 = eval_deriv(t, x)
    k2 = eval_deriv(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = eval_deriv(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = eval_deriv(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
