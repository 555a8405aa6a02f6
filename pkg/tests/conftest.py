"""Shared test helpers: exact polynomial construction from known roots and
an independent characteristic-polynomial oracle by cofactor expansion."""

from fractions import Fraction

import pytest

from adrclab import (
    ControllerConfig,
    EsoState,
    PlantConfig,
    Polynomial,
    ReferenceSpec,
    Scenario,
    UncertaintySpec,
    bandwidth_phi,
)


def poly_from_roots(real_roots=(), complex_pairs=()):
    """Exact polynomial with the given rational real roots and complex
    conjugate root pairs (re, im): product of (s - r) and
    (s^2 - 2*re*s + re^2 + im^2)."""
    p = Polynomial([1])
    for r in real_roots:
        r = Fraction(r)
        p = p * Polynomial([1, -r])
    for re, im in complex_pairs:
        re, im = Fraction(re), Fraction(im)
        p = p * Polynomial([1, -2 * re, re * re + im * im])
    return p


def _padd(a, b):
    out = [Fraction(0)] * max(len(a), len(b))
    for i, v in enumerate(a):
        out[i] += v
    for i, v in enumerate(b):
        out[i] += v
    return out


def _pmul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, va in enumerate(a):
        for j, vb in enumerate(b):
            out[i + j] += va * vb
    return out


def _pneg(a):
    return [-v for v in a]


def _det_poly(matrix):
    # determinant of a matrix of ascending-coefficient polynomials by
    # Laplace expansion along the first column
    m = len(matrix)
    if m == 1:
        return matrix[0][0]
    acc = [Fraction(0)]
    for row in range(m):
        entry = matrix[row][0]
        if all(v == 0 for v in entry):
            continue
        minor = [
            [matrix[r][c] for c in range(1, m)]
            for r in range(m) if r != row
        ]
        term = _pmul(entry, _det_poly(minor))
        if row % 2 == 1:
            term = _pneg(term)
        acc = _padd(acc, term)
    return acc


def char_poly_cofactor(a):
    """Characteristic polynomial det(sI - A) of a matrix of exact rationals
    (rows of Fractions), via cofactor expansion. Independent of the
    closed-form path it is used to check."""
    m = len(a)
    matrix = []
    for i in range(m):
        row = []
        for j in range(m):
            const = -Fraction(a[i][j])
            if i == j:
                row.append([const, Fraction(1)])  # s - a_ii
            else:
                row.append([const])
            pass
        matrix.append(row)
    det = _det_poly(matrix)
    return Polynomial(list(reversed(det)))


def exact_a2(phi, ratio):
    """Exact-rational companion matrix mirroring the float builder."""
    values = list(phi.phi)
    m = len(values)
    ratio = Fraction(ratio)
    a = [[Fraction(0)] * m for _ in range(m)]
    for i in range(m):
        a[i][0] = -values[i]
        if i < m - 1:
            a[i][i + 1] = Fraction(1)
    a[m - 1][0] = -values[-1] * (1 + ratio)
    return a


def make_scenario(
    kind="case1",
    b_delta=7.5,
    omega=1000.0,
    x0=(0.2, 0.2),
    xhat0=(0.2, 0.0),
    fhat0=0.0,
    horizon=10.0,
    step=None,
    phi=None,
    K=(4.0, 4.0),
    b_bar=1.0,
    reference=None,
    rho0=None,
    uncertainty=None,
):
    n = len(x0)
    plant = PlantConfig(
        n=n, b_bar=b_bar, b_delta=b_delta,
        uncertainty=uncertainty or UncertaintySpec(kind), x0=tuple(x0),
    )
    if rho0 is None:
        upper = min(n, len(xhat0))
        deviations = [abs(x0[i] - xhat0[i]) for i in range(1, upper)]
        rho0 = (max(deviations) if deviations else 0.0) + 1e-6
    controller = ControllerConfig(
        K=tuple(K), b_bar=b_bar, omega_o=omega,
        phi=phi or bandwidth_phi(n), rho0=rho0,
    )
    return Scenario(
        plant=plant, controller=controller,
        reference=reference or ReferenceSpec("zero"),
        eso_init=EsoState(tuple(xhat0), fhat0),
        horizon=horizon, step=step,
    )


@pytest.fixture(scope="session", autouse=True)
def warm_kernel():
    """Compile the integrator kernel once so per-test timings are honest."""
    sc = make_scenario(kind="none", b_delta=0.0, omega=100.0, horizon=0.01)
    from adrclab import run_closed_loop

    run_closed_loop(sc)
