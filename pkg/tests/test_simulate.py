"""Closed-loop simulator: compiled kernel vs the operation-composed
reference path, grid alignment, truth-series consistency, metric
extraction, sweeps and the falsification experiment."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from adrclab import (
    auto_step,
    bandwidth_phi,
    combined_derivative,
    control_law,
    default_feedback,
    eval_g,
    eso_gains,
    falsification_run,
    omega_sweep,
    rk4_step,
    run_closed_loop,
)
from adrclab.plant import PlantConfig, UncertaintySpec
from adrclab.simulate import (
    SWEEP_CSV_HEADER,
    metrics_json,
    segment_plan,
    sweep_csv_lines,
    timeseries_csv_lines,
)

from conftest import make_scenario


class TestScenarioValidation:
    def test_auto_step(self):
        assert auto_step(1e4) == pytest.approx(2e-5)
        assert auto_step(100.0) == 1e-3

    def test_step_stiffness_guard(self):
        with pytest.raises(ValueError):
            make_scenario(omega=1e4, step=1e-3)

    def test_step_at_the_limit_accepted(self):
        sc = make_scenario(omega=1e4, step=2e-5, horizon=0.1)
        assert sc.resolved_step() == 2e-5

    def test_dimension_mismatches(self):
        with pytest.raises(ValueError):
            make_scenario(K=(4.0,))
        with pytest.raises(ValueError):
            make_scenario(xhat0=(0.0,), x0=(0.0, 0.0))
        with pytest.raises(ValueError):
            make_scenario(horizon=0.0)


class TestSegmentPlan:
    def test_grid_hits_switch_and_kinks(self):
        sc = make_scenario(kind="case4", b_delta=-0.95, omega=1000.0,
                           horizon=10.0)
        result = run_closed_loop(sc)
        assert result.t_u > 0
        for point in (result.t_u, 5.0, 8.0):
            assert np.any(result.times == point)

    def test_segments_cover_horizon(self):
        sc = make_scenario(kind="case4", omega=1000.0, horizon=10.0)
        plan = segment_plan(sc, 0.5)
        assert plan[0][0] == 0.0
        assert plan[-1][1] == 10.0
        for (a, b, nsteps, active) in plan:
            assert (b - a) / nsteps <= sc.resolved_step() * (1 + 1e-12)
            assert active == (a >= 0.5)

    def test_inactive_until_switch(self):
        sc = make_scenario(omega=1000.0, horizon=1.0)
        result = run_closed_loop(sc)
        before = result.times < result.t_u
        assert np.all(result.u[before] == 0.0)
        assert np.any(result.u[~before] != 0.0)


def _reference_run(sc):
    """Integrate with rk4_step over combined_derivative on the kernel's
    exact grid; slow but composed purely from the module operations."""
    gains = eso_gains(sc.controller.phi, sc.controller.omega_o)
    from adrclab import compute_tu

    t_u = compute_tu(sc.controller)
    state = np.concatenate(
        [sc.plant.x0, sc.eso_init.xhat, [sc.eso_init.fhat], sc.plant.x0]
    )
    times = [sc.controller.t0]
    states = [state]
    n = sc.plant.n
    for (a, b, nsteps, active) in segment_plan(sc, t_u):
        h = (b - a) / nsteps

        def field(t, z):
            if active:
                from adrclab import reference_vector

                rvec, r_n, _ = reference_vector(sc.reference, t, n)
                u = control_law(sc.controller, t, a, z[n: 2 * n],
                                z[2 * n], rvec, r_n)
            else:
                u = 0.0
            return combined_derivative(sc, gains, t, z, u)

        for k in range(nsteps):
            state = rk4_step(field, a + k * h, state, h)
            # segment-boundary samples are pinned to the exact breakpoint
            times.append(b if k == nsteps - 1 else a + (k + 1) * h)
            states.append(state)
    return np.array(times), np.array(states)


@pytest.mark.parametrize("kind,b_delta,xhat0", [
    ("case1", 7.5, (0.2, 0.0)),
    ("case3", -0.95, (0.2, 0.0)),
    ("case4", 2.0, (0.2, 0.2)),
])
def test_kernel_matches_operation_composed_integration(kind, b_delta, xhat0):
    sc = make_scenario(kind=kind, b_delta=b_delta, omega=100.0,
                       xhat0=xhat0, horizon=0.5)
    result = run_closed_loop(sc)
    times, states = _reference_run(sc)
    assert np.allclose(result.times, times, atol=0, rtol=0)
    packed = np.hstack([result.x, result.xhat, result.fhat[:, None],
                        result.xstar])
    scale = np.abs(states).max()
    assert np.abs(packed - states).max() <= 1e-9 * max(scale, 1.0)


class TestRunClosedLoop:
    def test_trivial_matched_run_tracks_exactly(self):
        plant = PlantConfig(2, 1.0, 0.0, UncertaintySpec("none"), (0.3, -0.2))
        sc = make_scenario(
            kind="none", b_delta=0.0, omega=100.0,
            x0=(0.3, -0.2), xhat0=(0.3, -0.2), horizon=5.0,
        )
        assert sc.plant == plant
        result = run_closed_loop(sc)
        assert not result.diverged
        assert result.metrics["sup_track"] <= 1e-6

    def test_truth_series_recomputable_bitwise(self):
        sc = make_scenario(kind="case3", b_delta=7.5, omega=1000.0,
                           horizon=2.0)
        result = run_closed_loop(sc)
        spec = sc.plant.uncertainty
        recomputed = np.array([
            eval_g(spec, result.x[k], result.times[k])
            + sc.plant.b_delta * result.u[k]
            for k in range(len(result.times))
        ])
        assert np.array_equal(recomputed, result.f)

    def test_ideal_starts_at_plant_state(self):
        sc = make_scenario(kind="case2", omega=1000.0, horizon=0.1)
        result = run_closed_loop(sc)
        assert np.array_equal(result.xstar[0], result.x[0])

    def test_step_halving_converged(self):
        metrics = {}
        for step in (1e-3, 5e-4):
            sc = make_scenario(kind="case1", b_delta=0.0, omega=100.0,
                               step=step)
            metrics[step] = run_closed_loop(sc).metrics["sup_track"]
        rel = abs(metrics[1e-3] - metrics[5e-4]) / abs(metrics[1e-3])
        assert rel <= 1e-5

    def test_divergence_is_flagged_not_raised(self):
        sc = make_scenario(
            kind="sinusoid", b_delta=9.0, omega=1e4, horizon=10.0,
            x0=(0.0, 0.0), xhat0=(0.0, 0.0),
            uncertainty=UncertaintySpec("sinusoid", Mg=10.0, wg=1.0),
        )
        result = run_closed_loop(sc)
        assert result.diverged
        assert result.blowup_time is not None
        assert np.isfinite(result.x).all()

    def test_metrics_json_is_strict_json(self):
        sc = make_scenario(
            kind="sinusoid", b_delta=9.0, omega=1000.0, horizon=10.0,
            x0=(0.0, 0.0), xhat0=(0.0, 0.0),
            uncertainty=UncertaintySpec("sinusoid", Mg=10.0, wg=1.0),
        )
        result = run_closed_loop(sc)
        parsed = json.loads(metrics_json(result))
        assert parsed["sup_track"] == "inf" or isinstance(
            parsed["sup_track"], float)

    def test_csv_lines(self):
        sc = make_scenario(omega=100.0, horizon=0.05)
        result = run_closed_loop(sc)
        lines = list(timeseries_csv_lines(result))
        assert lines[0] == "t,x1,x2,xhat1,xhat2,fhat,f,u,xstar1,xstar2"
        assert len(lines) == 1 + len(result.times)
        decimated = list(timeseries_csv_lines(result, every=10))
        assert len(decimated) == 1 + math.ceil(len(result.times) / 10)
        first = [float(v) for v in lines[1].split(",")]
        assert first[0] == result.times[0]
        assert first[1] == result.x[0, 0]


class TestSteadyState:
    def test_case1_converges_by_thirty_seconds(self):
        # state-feedback uncertainty with a constant-limit external part:
        # the tracking error drains to zero, not just to a small band
        sc = make_scenario(kind="case1", b_delta=-0.95, omega=1e4,
                           horizon=30.0)
        result = run_closed_loop(sc)
        assert not result.diverged
        assert result.metrics["terminal_err"] <= 1e-3

    def test_shipped_phi_tuning_scenario_tracks(self):
        # widened margin (-1, 17) admits b_delta = 16 at the same controller
        from adrclab import load_scenario
        from dataclasses import replace

        sc = load_scenario(
            Path(__file__).resolve().parent.parent / "scenarios"
            / "case1_bd16_phi05.json")
        high = run_closed_loop(sc)
        low = run_closed_loop(
            replace(sc, controller=replace(sc.controller, omega_o=1e3)))
        assert not high.diverged
        assert high.metrics["sup_track"] <= 0.05
        assert high.metrics["sup_track"] < low.metrics["sup_track"]


class TestOmegaSweep:
    def test_case3_tracking_error_decreases_across_bandwidths(self):
        sc = make_scenario(kind="case3", b_delta=0.0, omega=100.0,
                           x0=(0.0, 0.0), xhat0=(0.0, 0.0), horizon=10.0)
        rows = omega_sweep(sc, [100.0, 1000.0, 10000.0])
        sups = [row.metrics["sup_track"] for row in rows]
        assert sups[0] > sups[1] > sups[2]

    def test_single_omega_matches_run(self):
        sc = make_scenario(omega=500.0, horizon=1.0)
        rows = omega_sweep(sc, [500.0])
        assert rows[0].metrics == run_closed_loop(sc).metrics

    def test_rows_preserve_input_order_and_record_divergence(self):
        sc = make_scenario(
            kind="sinusoid", b_delta=9.0, omega=100.0, horizon=5.0,
            x0=(0.0, 0.0), xhat0=(0.0, 0.0),
            uncertainty=UncertaintySpec("sinusoid", Mg=10.0, wg=1.0),
        )
        rows = omega_sweep(sc, [10000.0, 100.0])
        assert [r.omega_o for r in rows] == [10000.0, 100.0]
        assert rows[0].metrics["diverged"]
        assert not math.isnan(rows[1].metrics["sup_track"])

    def test_threaded_matches_serial(self, monkeypatch):
        sc = make_scenario(kind="case3", b_delta=0.0, omega=100.0,
                           horizon=1.0, x0=(0.0, 0.0), xhat0=(0.0, 0.0))
        serial = omega_sweep(sc, [100.0, 200.0, 400.0])
        monkeypatch.setenv("ADRC_LAB_THREADS", "3")
        threaded = omega_sweep(sc, [100.0, 200.0, 400.0])
        assert [r.metrics for r in serial] == [r.metrics for r in threaded]

    def test_sweep_csv(self):
        sc = make_scenario(omega=200.0, horizon=0.5)
        lines = list(sweep_csv_lines(omega_sweep(sc, [200.0])))
        assert lines[0] == SWEEP_CSV_HEADER
        assert lines[1].startswith("200.0,")

    def test_rejects_bad_omega(self):
        with pytest.raises(ValueError):
            omega_sweep(make_scenario(horizon=1.0), [0.0])


class TestFalsification:
    def test_default_feedback_binomial(self):
        assert default_feedback(2) == (4.0, 4.0)
        assert default_feedback(3) == (8.0, 12.0, 6.0)

    def test_guard_rejects_tolerable_ratio(self):
        with pytest.raises(ValueError):
            falsification_run(2, bandwidth_phi(2), 7.5, 10.0, 1.0, 0.0,
                              [100.0])

    def test_zero_amplitude_not_refuted(self):
        ev = falsification_run(2, bandwidth_phi(2), 9, 0.0, 1.0, 0.0,
                               [100.0], eps=0.1, horizon=2.0)
        assert not ev.refuted
        assert ev.rows[0].sup_track <= 1e-9

    def test_intolerable_ratio_refutes_across_bandwidths(self):
        ev = falsification_run(2, bandwidth_phi(2), 9, 10.0, 1.0, 0.0,
                               [100.0, 1000.0], eps=0.1, horizon=5.0)
        assert ev.refuted
        assert all(r.diverged or r.sup_track > 0.1 for r in ev.rows)
