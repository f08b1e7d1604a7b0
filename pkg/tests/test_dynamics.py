"""Model layer: right-hand side, integrator, power, equilibria."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from behuq.dynamics import (
    EmptyWindowError,
    HarvesterParams,
    NonFiniteError,
    State,
    Trajectory,
    batch_mean_power,
    batch_power_series,
    equilibria,
    integrate,
    mean_power,
    rhs,
    transient_cut,
)

NOMINAL = dict(xi=0.01, chi=0.05, lam=0.05, kappa=0.5, omega=0.8)


def sym_linear(f: float) -> HarvesterParams:
    return HarvesterParams(f=f, **NOMINAL)


# ---------------------------------------------------------------------------
# right-hand side


def test_rhs_hand_evaluated_golden():
    # Independent 40-digit evaluation of the model equations at
    # (x, xdot, v) = (0.5, 0.2, 0.1), t = 0.7, asymmetric parameter set
    # (beta=1, delta=0.15, phi=10 deg, p=0.59, f=0.083).
    params = HarvesterParams(f=0.083, beta=1.0, delta=0.15,
                             phi=math.radians(10.0), p=0.59, **NOMINAL)
    dx, dxd, dv = rhs(State(0.5, 0.2, 0.1), 0.7, params)
    assert dx == 0.2
    assert math.isclose(dxd, 0.40127459903760244, rel_tol=1e-14)
    assert math.isclose(dv, -0.155, rel_tol=1e-14)


def test_rhs_symmetric_linear_cross_terms_vanish():
    # With beta = delta = phi = 0 the acceleration reduces to the classic
    # Duffing form; check one point against a direct transcription.
    params = sym_linear(0.1)
    x, xd, v, t = -0.7, 0.3, -0.2, 2.5
    _, dxd, dv = rhs(State(x, xd, v), t, params)
    want_dxd = (-2 * 0.01 * xd + 0.5 * x * (1 - x * x) + 0.05 * v
                + 0.1 * math.cos(0.8 * t))
    assert math.isclose(dxd, want_dxd, rel_tol=1e-15)
    assert math.isclose(dv, -0.05 * v - 0.5 * xd, rel_tol=1e-15)


def test_kernel_step_matches_reference_rhs():
    # One RK4 step of the compiled kernel against a hand-rolled RK4 step
    # built purely on rhs(); the two formulations must agree to the last
    # few ulps.
    params = HarvesterParams(f=0.105, beta=1.0, delta=0.15,
                             phi=math.radians(10.0), p=0.59, **NOMINAL)
    dt = 0.01
    traj = integrate(params, State(1.0, 0.0, 0.0), t_end=dt, dt=dt)

    def step(s, t):
        k1 = rhs(s, t, params)
        s2 = State(s.x + 0.5 * dt * k1.x, s.xdot + 0.5 * dt * k1.xdot,
                   s.v + 0.5 * dt * k1.v)
        k2 = rhs(s2, t + 0.5 * dt, params)
        s3 = State(s.x + 0.5 * dt * k2.x, s.xdot + 0.5 * dt * k2.xdot,
                   s.v + 0.5 * dt * k2.v)
        k3 = rhs(s3, t + 0.5 * dt, params)
        s4 = State(s.x + dt * k3.x, s.xdot + dt * k3.xdot, s.v + dt * k3.v)
        k4 = rhs(s4, t + dt, params)
        return State(
            s.x + dt / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x),
            s.xdot + dt / 6.0 * (k1.xdot + 2 * k2.xdot + 2 * k3.xdot + k4.xdot),
            s.v + dt / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v))

    want = step(State(1.0, 0.0, 0.0), 0.0)
    got = traj.state(1)
    assert math.isclose(got.x, want.x, rel_tol=1e-14)
    assert math.isclose(got.xdot, want.xdot, rel_tol=1e-14)
    assert math.isclose(got.v, want.v, rel_tol=1e-14)


# ---------------------------------------------------------------------------
# parameters


def test_params_validation():
    with pytest.raises(ValueError):
        HarvesterParams(xi=-0.01, chi=0.05, lam=0.05, kappa=0.5,
                        f=0.1, omega=0.8)
    with pytest.raises(ValueError):
        HarvesterParams(xi=0.01, chi=0.05, lam=0.05, kappa=0.5,
                        f=0.1, omega=0.0)
    with pytest.raises(ValueError):
        HarvesterParams(xi=0.01, chi=0.05, lam=math.nan, kappa=0.5,
                        f=0.1, omega=0.8)


def test_params_get_and_replace_spell_lambda_out():
    params = sym_linear(0.1)
    assert params.get("lambda") == 0.05
    bumped = params.replace(**{"lambda": 0.08})
    assert bumped.lam == 0.08
    assert bumped.get("kappa") == params.kappa


def test_variant_taxonomy():
    assert sym_linear(0.1).variant == "sym-linear"
    assert sym_linear(0.1).replace(beta=1.0).variant == "sym-nonlinear"
    assert sym_linear(0.1).replace(delta=0.15).variant == "asymmetric"
    assert sym_linear(0.1).replace(phi=0.1).variant == "asymmetric"


def test_kernel_row_folds_tilt_into_single_column():
    params = HarvesterParams(f=0.2, beta=1.0, delta=0.15,
                             phi=math.radians(10.0), p=0.59, **NOMINAL)
    row = params.kernel_row()
    assert row.shape == (9,)
    assert row[8] == 0.59 * math.sin(math.radians(10.0))
    # phi enters only through p*sin(phi)
    same = params.replace(phi=math.pi - params.phi)
    np.testing.assert_allclose(same.kernel_row(), row, rtol=1e-15)


# ---------------------------------------------------------------------------
# integrator


def test_linear_voltage_decay_matches_exponential():
    # With kappa = 0 the voltage equation decouples to vdot = -lam*v; RK4 at
    # dt = 0.01 should track the exponential to ~1e-12 over 10 time units.
    params = HarvesterParams(xi=0.01, chi=0.0, lam=0.05, kappa=0.0,
                             f=0.0, omega=0.8)
    traj = integrate(params, State(0.0, 0.0, 1.0), t_end=10.0, dt=0.01)
    exact = np.exp(-0.05 * traj.t)
    assert np.max(np.abs(traj.v - exact)) < 1e-12


def test_energy_decays_without_forcing():
    # Unforced, damped, uncoupled oscillator started inside a well must
    # settle onto the well bottom.
    params = HarvesterParams(xi=0.05, chi=0.0, lam=0.05, kappa=0.5,
                             f=0.0, omega=0.8)
    traj = integrate(params, State(1.2, 0.0, 0.0), t_end=400.0, dt=0.01)
    assert abs(traj.x[-1] - 1.0) < 1e-6
    assert abs(traj.xdot[-1]) < 1e-6


def test_integrator_self_convergence_on_smooth_case():
    # Intrawell regime: halving dt must leave the mean power essentially
    # unchanged (the acceptance gate asserts the same at nominal settings;
    # this is the fast unit-level version).
    params = sym_linear(0.041)
    p1 = mean_power(integrate(params, t_end=200.0, dt=0.01))
    p2 = mean_power(integrate(params, t_end=200.0, dt=0.005))
    assert math.isclose(p1, p2, rel_tol=1e-6)


def test_power_identity_on_emitted_trajectory():
    traj = integrate(sym_linear(0.105), t_end=50.0, dt=0.01)
    np.testing.assert_array_equal(traj.power, 0.05 * traj.v * traj.v)


def test_time_grid_is_uniform_and_snapped():
    traj = integrate(sym_linear(0.1), t_end=1.0, dt=0.3)
    # round(1.0/0.3) = 3 steps
    assert len(traj) == 4
    assert traj.t[-1] == pytest.approx(0.9)


def test_blowup_raises_with_failure_time():
    params = HarvesterParams(xi=0.0, chi=5.0, lam=0.0, kappa=5.0,
                             f=500.0, omega=0.8)
    with pytest.raises(NonFiniteError) as err:
        integrate(params, t_end=2000.0, dt=0.5)
    assert err.value.t_fail >= 0.0


def test_integrate_rejects_bad_steps():
    with pytest.raises(ValueError):
        integrate(sym_linear(0.1), dt=-0.01)
    with pytest.raises(ValueError):
        integrate(sym_linear(0.1), t_end=0.0)


# ---------------------------------------------------------------------------
# averaging


def test_transient_cut_rounds_to_nearest():
    assert transient_cut(200000, 0.5) == 100000
    assert transient_cut(3, 0.5) == 2
    assert transient_cut(10, 0.0) == 0
    with pytest.raises(ValueError):
        transient_cut(10, 1.0)


def test_mean_power_of_constant_power_is_exact():
    # A hand-built trajectory with constant power: the trapezoid average
    # must return that constant.
    t = np.arange(101) * 0.01
    z = np.zeros_like(t)
    traj = Trajectory(t=t, x=z, xdot=z, v=z, power=np.full_like(t, 0.2),
                      dt=0.01, params=sym_linear(0.1))
    assert mean_power(traj) == pytest.approx(0.2, rel=1e-14)


def test_mean_power_of_linear_ramp_is_midpoint():
    # Trapezoid integration is exact for a linear power history.
    t = np.arange(201) * 0.01
    traj = Trajectory(t=t, x=t, xdot=t, v=t, power=3.0 * t,
                      dt=0.01, params=sym_linear(0.1))
    lo = t[transient_cut(200, 0.5)]
    assert mean_power(traj) == pytest.approx(3.0 * (lo + t[-1]) / 2, rel=1e-13)


def test_mean_power_window_too_short():
    traj = integrate(sym_linear(0.1), t_end=0.02, dt=0.01)
    with pytest.raises(EmptyWindowError):
        mean_power(traj, transient_fraction=0.9)


def test_steady_window_matches_mean_power_cut():
    traj = integrate(sym_linear(0.105), t_end=100.0, dt=0.01)
    tail = traj.steady_window(0.5)
    assert tail.t[0] == pytest.approx(50.0)
    assert np.trapezoid(tail.power, tail.t) / (tail.t[-1] - tail.t[0]) \
        == pytest.approx(mean_power(traj), rel=1e-15)


# ---------------------------------------------------------------------------
# equilibria


def test_symmetric_equilibria_are_the_double_well():
    eq = equilibria(sym_linear(0.1))
    xs = [x for x, _ in eq]
    stable = [s for _, s in eq]
    assert xs == pytest.approx([-1.0, 0.0, 1.0], abs=1e-12)
    assert stable == [True, False, True]


def test_skewed_potential_keeps_three_equilibria():
    eq = equilibria(sym_linear(0.1).replace(delta=0.15))
    assert len(eq) == 3
    assert [s for _, s in eq] == [True, False, True]
    # skew pushes the outer wells off +-1 asymmetrically
    assert abs(eq[0][0] + 1.0) > 1e-3
    assert abs(eq[2][0] - 1.0) > 1e-3


def test_strong_tilt_swallows_a_well():
    # Large static tilt leaves a single rest point.
    tilted = sym_linear(0.1).replace(phi=math.pi / 2, p=0.5)
    eq = equilibria(tilted)
    assert len(eq) == 1
    assert eq[0][1] is True


@given(delta=st.floats(-0.2, 0.2), psin=st.floats(-0.15, 0.15))
@settings(max_examples=60, deadline=None)
def test_equilibria_are_roots_with_consistent_stability(delta, psin):
    phi = math.pi / 2  # sin(phi) = 1, so p is the tilt force directly
    params = HarvesterParams(xi=0.01, chi=0.05, lam=0.05, kappa=0.5,
                             f=0.1, omega=0.8, delta=delta, phi=phi, p=psin)
    eq = equilibria(params)
    assert 1 <= len(eq) <= 3
    for x, stable in eq:
        force = 0.5 * x * (1 + 2 * delta * x - x * x) + psin
        assert abs(force) < 1e-9
        slope = 0.5 + 2 * delta * x - 1.5 * x * x
        assert stable == (slope < 0)


# ---------------------------------------------------------------------------
# batch kernels


def test_batch_states_match_single_trajectory_bitwise():
    params = HarvesterParams(f=0.091, beta=1.0, delta=0.15,
                             phi=math.radians(10.0), p=0.59, **NOMINAL)
    rows = np.vstack([sym_linear(0.041).kernel_row(), params.kernel_row()])
    t, series = batch_power_series(rows, t_end=40.0, dt=0.01, stride=1)
    for i, pr in enumerate([sym_linear(0.041), params]):
        traj = integrate(pr, t_end=40.0, dt=0.01)
        np.testing.assert_array_equal(series[i], traj.power)
    assert t[-1] == pytest.approx(40.0)


def test_batch_mean_power_matches_trajectory_route():
    rows = np.vstack([sym_linear(f).kernel_row() for f in (0.041, 0.115)])
    batch = batch_mean_power(rows, t_end=400.0, dt=0.01)
    for i, f in enumerate((0.041, 0.115)):
        single = mean_power(integrate(sym_linear(f), t_end=400.0, dt=0.01))
        assert math.isclose(batch[i], single, rel_tol=1e-11)


def test_batch_blowup_marks_lane_nan_without_poisoning_others():
    bad = HarvesterParams(xi=0.0, chi=5.0, lam=0.0, kappa=5.0,
                          f=500.0, omega=0.8)
    rows = np.vstack([sym_linear(0.041).kernel_row(), bad.kernel_row(),
                      sym_linear(0.115).kernel_row()])
    out = batch_mean_power(rows, t_end=400.0, dt=0.5)
    assert np.isnan(out[1])
    assert np.isfinite(out[0]) and np.isfinite(out[2])


def test_power_series_stride_subsamples_the_full_series():
    rows = sym_linear(0.105).kernel_row()[None, :]
    t1, full = batch_power_series(rows, t_end=20.0, dt=0.01, stride=1)
    t5, sub = batch_power_series(rows, t_end=20.0, dt=0.01, stride=5)
    np.testing.assert_array_equal(sub[0], full[0, ::5])
    np.testing.assert_allclose(t5, t1[::5], rtol=1e-12)


# ---------------------------------------------------------------------------
# frozen regression anchors (values generated by this package at the pinned
# settings; they guard against silent arithmetic changes, since chaotic
# cases amplify any reordering to O(1%) in mean power)


def test_mean_power_regression_intrawell():
    value = mean_power(integrate(sym_linear(0.041)))
    assert math.isclose(value, 7.62982771104896e-05, rel_tol=1e-12)


def test_mean_power_regression_chaotic():
    value = mean_power(integrate(sym_linear(0.083)))
    assert math.isclose(value, 0.0073319986711862664, rel_tol=1e-12)


def test_batch_mean_power_regression():
    rows = np.vstack([sym_linear(f).kernel_row() for f in (0.041, 0.083)])
    out = batch_mean_power(rows)
    assert math.isclose(out[0], 7.629827711049043e-05, rel_tol=1e-12)
    assert math.isclose(out[1], 0.007331998671186309, rel_tol=1e-12)
