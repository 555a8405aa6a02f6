"""Control law: feedback validation, the peaking gate arithmetic and its
clamp, bit-exact zero before the switch, and ideal-trajectory decay."""

import math

import numpy as np
import pytest

from adrclab import (
    ControllerConfig,
    bandwidth_phi,
    build_a1,
    compute_tu,
    control_law,
    ideal_derivative,
    reference_vector,
    rk4_step,
    solve_lyapunov,
    spectral_norm,
    validate_feedback,
)
from adrclab.plant import ReferenceSpec


class TestValidateFeedback:
    def test_double_pole(self):
        assert validate_feedback([4, 4]).stable  # (s+2)^2

    def test_negative_constant_coefficient(self):
        assert not validate_feedback([-1, 1]).stable

    def test_first_order(self):
        assert validate_feedback([1]).stable

    def test_empty(self):
        with pytest.raises(ValueError):
            validate_feedback([])


class TestControllerConfig:
    def test_rejects_destabilising_gain(self):
        with pytest.raises(ValueError):
            ControllerConfig(K=(-1.0, 1.0), b_bar=1.0, omega_o=10.0,
                             phi=bandwidth_phi(2), rho0=1.0)

    def test_rejects_bad_scalars(self):
        for kwargs in (
            {"b_bar": 0.0}, {"omega_o": 0.0}, {"rho0": 0.0},
        ):
            base = dict(K=(4.0, 4.0), b_bar=1.0, omega_o=10.0,
                        phi=bandwidth_phi(2), rho0=1.0)
            base.update(kwargs)
            with pytest.raises(ValueError):
                ControllerConfig(**base)


class TestComputeTu:
    def test_first_order_is_start_time(self):
        cfg = ControllerConfig(K=(2.0,), b_bar=1.0, omega_o=1e6,
                               phi=bandwidth_phi(1), rho0=100.0, t0=1.5)
        assert compute_tu(cfg) == 1.5

    def test_clamped_when_product_small(self):
        cfg = ControllerConfig(K=(4.0, 4.0), b_bar=1.0, omega_o=5.0,
                               phi=bandwidth_phi(2), rho0=0.1, t0=2.0)
        assert compute_tu(cfg) == 2.0  # omega*rho0 = 0.5 <= 1

    def test_formula(self):
        cfg = ControllerConfig(K=(4.0, 4.0), b_bar=1.0, omega_o=1e4,
                               phi=bandwidth_phi(2), rho0=1.0)
        norm = spectral_norm(solve_lyapunov(build_a1(bandwidth_phi(2))))
        expected = 2.0 * 1 * norm * math.log(1e4) / 1e4
        assert compute_tu(cfg) == pytest.approx(expected, rel=1e-12)

    def test_non_increasing_in_bandwidth(self):
        rho0 = 2.0
        values = []
        for omega in (math.e / rho0, 10.0, 100.0, 1e3, 1e4):
            cfg = ControllerConfig(K=(4.0, 4.0), b_bar=1.0, omega_o=omega,
                                   phi=bandwidth_phi(2), rho0=rho0)
            values.append(compute_tu(cfg))
        assert all(a >= b for a, b in zip(values, values[1:]))


class TestControlLaw:
    def _cfg(self, b_bar=1.0):
        return ControllerConfig(K=(4.0, 4.0), b_bar=b_bar, omega_o=10.0,
                                phi=bandwidth_phi(2), rho0=1.0)

    def test_exactly_zero_before_switch(self):
        cfg = self._cfg()
        u = control_law(cfg, 0.99, 1.0, (3.0, -2.0), 17.0, (0.0, 0.0), 5.0)
        assert u == 0.0

    def test_equilibrium(self):
        cfg = self._cfg()
        assert control_law(cfg, 1.0, 0.0, (0.3, 0.4), 0.0, (0.3, 0.4), 0.0) == 0.0

    def test_value(self):
        cfg = self._cfg()
        u = control_law(cfg, 1.0, 0.0, (1.0, 0.0), 2.0, (0.0, 0.0), 0.0)
        assert u == -6.0

    def test_divides_by_nominal_gain(self):
        cfg = self._cfg(b_bar=2.0)
        u = control_law(cfg, 1.0, 0.0, (1.0, 0.0), 2.0, (0.0, 0.0), 0.0)
        assert u == -3.0


class TestIdealDerivative:
    def test_zero_reference_zero_state(self):
        out = ideal_derivative((4.0, 4.0), (0.0, 0.0), (0.0, 0.0), 0.0)
        assert np.array_equal(out, [0.0, 0.0])

    def test_substitution(self):
        out = ideal_derivative((4.0, 4.0), (1.0, 0.0), (0.0, 0.0), 0.0)
        assert np.array_equal(out, [0.0, -4.0])

    def test_error_term_vanishes_on_reference(self):
        spec = ReferenceSpec("sinusoid", amp=1.0, freq=2.0)
        t = 0.3
        rvec, r_n, _ = reference_vector(spec, t, 2)
        out = ideal_derivative((4.0, 4.0), rvec, rvec, r_n)
        assert out[0] == rvec[1]
        assert out[1] == r_n

    def test_exponential_decay(self):
        k = (4.0, 4.0)
        x = np.array([1.0, 1.0])
        h = 1e-3
        norm0 = np.linalg.norm(x)
        for step in range(10_000):
            t = step * h
            assert np.linalg.norm(x) <= 10.0 * norm0 * math.exp(-t)
            x = rk4_step(
                lambda tt, xx: ideal_derivative(k, xx, (0.0, 0.0), 0.0),
                t, x, h,
            )
        assert np.linalg.norm(x) <= 1e-3
