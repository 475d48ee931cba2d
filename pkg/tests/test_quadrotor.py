import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import small_scenario
from formation_assign import quadrotor as quad
from formation_assign.dynamics import rk4_step
from formation_assign.errors import InputError, SingularityError
from formation_assign.quadrotor import (
    AttitudeGains,
    QuadParams,
    QuadState,
    ReferenceFilter,
    desired_attitude,
    quad_deriv,
    quad_outer_loop,
    sliding_attitude_control,
    sliding_surfaces,
    total_thrust,
)
from formation_assign.scenario import scenario_from_dict
from formation_assign.sim import run_scenario

P = QuadParams()


def state(**kw):
    s = np.zeros(quad.STATE_DIM)
    for name, val in kw.items():
        s[getattr(quad, name.upper())] = val
    return s


class TestParams:
    def test_defaults(self):
        assert (P.m, P.g, P.Ixx, P.Iyy, P.Izz, P.arm) == (0.486, 9.81, 3.827e-3, 3.827e-3, 7.6566e-3, 0.1)

    def test_derived(self):
        assert P.a1 == pytest.approx((P.Iyy - P.Izz) / P.Ixx)
        assert P.a2 == pytest.approx((P.Izz - P.Ixx) / P.Iyy)
        assert P.a3 == pytest.approx(0.0)
        assert P.b1 == pytest.approx(0.1 / 3.827e-3)
        assert P.b3 == pytest.approx(1 / 7.6566e-3)

    def test_derived_track_fields(self):
        heavy = QuadParams(Izz=0.02)
        assert heavy.a1 == pytest.approx((3.827e-3 - 0.02) / 3.827e-3)

    def test_nonpositive_rejected(self):
        with pytest.raises(InputError):
            QuadParams(m=0.0)

    def test_state_roundtrip(self):
        arr = np.arange(12.0)
        np.testing.assert_array_equal(QuadState.from_array(arr).as_array(), arr)


class TestPlant:
    def test_hover(self):
        out = quad_deriv(state(), [0, 0, 0, P.m * P.g], P)
        np.testing.assert_allclose(out, 0, atol=1e-14)

    def test_free_fall(self):
        out = quad_deriv(state(), [0, 0, 0, 0], P)
        assert out[quad.VZ] == -9.81
        np.testing.assert_array_equal(out[quad.DPHI:], 0)

    def test_yaw_torque(self):
        c = 0.02
        out = quad_deriv(state(), [0, 0, c, 0], P)
        assert out[quad.DPSI] == pytest.approx(c / 7.6566e-3)
        assert out[quad.DPHI] == 0 and out[quad.DTHETA] == 0

    def test_gyroscopic_pairings(self):
        s = state(dphi=1.0, dtheta=2.0, dpsi=3.0)
        out = quad_deriv(s, [0, 0, 0, 0], P)
        assert out[quad.DPHI] == pytest.approx(P.a1 * 2 * 3)
        assert out[quad.DTHETA] == pytest.approx(P.a2 * 1 * 3)
        assert out[quad.DPSI] == pytest.approx(P.a3 * 1 * 2)

    def test_batched(self):
        rng = np.random.default_rng(0)
        S, U = rng.normal(size=(5, 12)), rng.normal(size=(5, 4))
        batched = quad_deriv(S, U, P)
        for k in range(5):
            np.testing.assert_array_equal(batched[k], quad_deriv(S[k], U[k], P))

    def test_energy_conserved_without_inputs(self):
        s = state(z=3.0, vx=1.0, vy=-0.5, vz=4.0, dphi=0.2, dtheta=-0.1, dpsi=0.3)
        energy = lambda x: 0.5 * P.m * np.sum(x[quad.VX:quad.VZ + 1] ** 2) + P.m * P.g * x[quad.Z]
        e0 = energy(s)
        f = lambda t, x: quad_deriv(x, np.zeros(4), P)
        for k in range(1000):
            s = rk4_step(f, s, k * 1e-3, 1e-3)
        assert abs(energy(s) - e0) / abs(e0) < 1e-8


class TestInversion:
    def test_hover_command(self):
        phi, theta = desired_attitude(0.0, 0.0, 0.0, 0.0, 9.81)
        assert phi == 0 and theta == 0

    def test_pitch_quarter(self):
        phi, theta = desired_attitude(9.81, 0.0, 0.0, 0.0, 9.81)
        assert theta == pytest.approx(np.pi / 4) and phi == pytest.approx(0)

    def test_roll_quarter(self):
        phi, theta = desired_attitude(0.0, 9.81, 0.0, 0.0, 9.81)
        assert theta == pytest.approx(0) and phi == pytest.approx(-np.pi / 4)

    def test_singular(self):
        with pytest.raises(SingularityError):
            desired_attitude(1.0, 0.0, -9.81, 0.0, 9.81)

    def test_hover_thrust(self):
        assert total_thrust(0.0, 0.0, 0.0, P.m, P.g) == pytest.approx(4.76766, abs=1e-10)

    def test_zero_thrust(self):
        assert total_thrust(0.0, 0.0, -P.g, P.m, P.g) == 0

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 4))
    def test_thrust_homogeneity(self, ux, uy, uz, a):
        scaled = total_thrust(a * ux, a * uy, a * (uz + P.g) - P.g, P.m, P.g)
        assert scaled == pytest.approx(a * total_thrust(ux, uy, uz, P.m, P.g), rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-np.pi, np.pi))
    def test_inversion_any_yaw(self, ux, uy, uz, psi):
        phi, theta = desired_attitude(ux, uy, uz, psi, P.g)
        U_z = total_thrust(ux, uy, uz, P.m, P.g)
        s = state(phi=phi, theta=theta, psi=psi)
        acc = quad_deriv(s, [0, 0, 0, U_z], P)[quad.VX:quad.VZ + 1]
        np.testing.assert_allclose(acc, [ux, uy, uz], atol=1e-10)


def attitude_closed_loop(target, T=1.0, dt=1e-3, gains=AttitudeGains()):
    refs = np.zeros((3, 3))
    refs[:, 0] = target
    s = state()
    f = lambda t, x: quad_deriv(x, np.append(sliding_attitude_control(x, refs, gains, P), P.m * P.g), P)
    surfaces = [sliding_surfaces(s, refs, gains)]
    for k in range(int(round(T / dt))):
        s = rk4_step(f, s, k * dt, dt)
        surfaces.append(sliding_surfaces(s, refs, gains))
    return s, np.array(surfaces)


class TestSlidingMode:
    def test_zero_error_zero_moment(self):
        out = sliding_attitude_control(state(), np.zeros((3, 3)), AttitudeGains(), P)
        np.testing.assert_array_equal(out, 0)

    def test_closed_loop_algebra(self):
        rng = np.random.default_rng(7)
        gains = AttitudeGains()
        for _ in range(20):
            s = rng.normal(size=12) * 0.3
            refs = rng.normal(size=(3, 3)) * 0.3
            u = sliding_attitude_control(s, refs, gains, P)
            ang_acc = quad_deriv(s, np.append(u, 0.0), P)[quad.DPHI:]
            e = s[quad.PHI:quad.PSI + 1] - refs[:, 0]
            de = s[quad.DPHI:] - refs[:, 1]
            surf = de + gains.lambdas * e
            dde = ang_acc - refs[:, 2]
            np.testing.assert_allclose(
                dde, -gains.lambdas * de - gains.ks * np.clip(surf / 0.01, -1, 1), atol=1e-9
            )

    def test_reaches_boundary_layer_within_one_second(self):
        # a small step keeps |s(0)| = lambda*|e(0)| below k * 1 s
        _, surf = attitude_closed_loop(np.array([0.03, -0.02, 0.04]))
        assert np.all(np.abs(surf[-1]) < 0.01)
        assert np.all(np.abs(surf[0]) > 0.01)

    def test_s_squared_decreases_outside_layer(self):
        _, surf = attitude_closed_loop(np.array([0.2, -0.15, 0.1]), T=0.5)
        outside = np.abs(surf[:-1]) > 0.01
        assert outside.any()
        assert np.all((surf[1:] ** 2 - surf[:-1] ** 2)[outside] < 0)

    def test_reference_filter_settles(self):
        filt = ReferenceFilter()
        x = np.zeros(2)
        f = lambda t, y: np.array(filt.deriv(y[0], y[1], 0.3))
        for k in range(500):
            x = rk4_step(f, x, k * 1e-3, 1e-3)
        assert x[0] == pytest.approx(0.3, abs=1e-6)


class TestOuterLoop:
    def test_hover_composition(self):
        inputs, fdot = quad_outer_loop(np.zeros((2, 12)), np.zeros((2, 4)), np.zeros((2, 3)),
                                       AttitudeGains(), P, ReferenceFilter())
        np.testing.assert_allclose(inputs[:, 3], P.m * P.g)
        np.testing.assert_allclose(inputs[:, :3], 0, atol=1e-14)
        np.testing.assert_array_equal(fdot, 0)

    def test_yaw_held_at_zero(self):
        s = np.zeros((1, 12))
        s[0, quad.PSI] = 0.1
        inputs, _ = quad_outer_loop(s, np.zeros((1, 4)), np.zeros((1, 3)), AttitudeGains(), P,
                                    ReferenceFilter())
        assert inputs[0, 2] < 0

    def test_perfect_attitude_matches_double_integrator(self):
        common = dict(
            dimension=3,
            leader={"kind": "helix", "params": {}},
            initial_positions=[[1.0, 9.0, 28.0], [-1.0, 11.0, 29.0]],
            initial_velocities=[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]],
            goals=[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
            estimator_init="leader",
            assignment={"enabled": False, "period": 0.1},
        )
        di = run_scenario(scenario_from_dict(small_scenario(**common)))
        qd = run_scenario(scenario_from_dict(small_scenario(
            plant="quadrotor", quadrotor={"perfect_attitude": True}, **common)))
        assert np.max(np.abs(di.p - qd.p)) < 1e-6
        assert np.max(np.abs(di.v - qd.v)) < 1e-6
