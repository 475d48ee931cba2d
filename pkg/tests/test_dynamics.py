from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from formation_assign.dynamics import (
    AgentState,
    LeaderTrajectory,
    assumption1_bounds,
    double_integrator_deriv,
    leader_signal,
    rk4_step,
)
from formation_assign.errors import InputError, NumericError

finite = st.floats(-10, 10, allow_nan=False)


class TestLeaderSignal:
    def test_planar_sine_at_zero(self):
        sig = leader_signal(LeaderTrajectory("planar_sine"), 0.0)
        np.testing.assert_allclose(sig.p0, [0, 0], atol=1e-15)
        np.testing.assert_allclose(sig.v0, [0.2, 0.1], atol=1e-15)
        np.testing.assert_allclose(sig.u0, [0, 0], atol=1e-15)
        np.testing.assert_allclose(sig.u0_dot, [0, -0.025], atol=1e-15)

    def test_helix_at_zero(self):
        sig = leader_signal(LeaderTrajectory("helix"), 0.0)
        np.testing.assert_allclose(sig.p0, [0, 10, 30], atol=1e-15)
        np.testing.assert_allclose(sig.v0, [5, 0, 1], atol=1e-15)

    @pytest.mark.parametrize("t", [0.0, 1.3, 7.9])
    def test_constant_acceleration_has_no_jerk(self, t):
        traj = LeaderTrajectory("constant_acceleration", {"p": [1, 2], "v": [0, 1], "a": [0.3, -0.1]})
        sig = leader_signal(traj, t)
        np.testing.assert_array_equal(sig.u0_dot, [0, 0])
        np.testing.assert_allclose(sig.u0, [0.3, -0.1])

    def test_polynomial(self):
        traj = LeaderTrajectory("polynomial", {"coefficients": [[1, 2, 3, 4], [0, 0, 0, 0, 1]]})
        sig = leader_signal(traj, 2.0)
        np.testing.assert_allclose(sig.p0, [1 + 4 + 12 + 32, 16])
        np.testing.assert_allclose(sig.v0, [2 + 12 + 48, 32])
        np.testing.assert_allclose(sig.u0, [6 + 48, 48])
        np.testing.assert_allclose(sig.u0_dot, [24, 48])

    def test_negative_time_rejected(self):
        with pytest.raises(InputError):
            leader_signal(LeaderTrajectory("helix"), -0.1)

    def test_unknown_kind(self):
        with pytest.raises(InputError):
            LeaderTrajectory("lissajous")

    @settings(max_examples=60, deadline=None)
    @given(
        st.sampled_from(["planar_sine", "helix"]),
        st.floats(0.001, 20.0),
    )
    def test_derivatives_match_central_differences(self, kind, t):
        traj = LeaderTrajectory(kind)
        h = 1e-5
        lo, mid, hi = (leader_signal(traj, t + s) for s in (-h, 0.0, h))
        for low, high, exact in (
            (lo.p0, hi.p0, mid.v0),
            (lo.v0, hi.v0, mid.u0),
            (lo.u0, hi.u0, mid.u0_dot),
        ):
            fd = (high - low) / (2 * h)
            scale = max(np.linalg.norm(exact), 1e-3)
            assert np.linalg.norm(fd - exact) / scale < 1e-6

    @pytest.mark.parametrize("kind", ["planar_sine", "helix"])
    def test_declared_bounds_hold(self, kind):
        traj = LeaderTrajectory(kind)
        c0, c1 = assumption1_bounds(traj)
        for t in np.linspace(0, 40, 2001):
            sig = leader_signal(traj, t)
            assert np.linalg.norm(sig.u0) <= c0 * (1 + 1e-12)
            assert np.linalg.norm(sig.u0_dot) <= c1 * (1 + 1e-12)


class TestDoubleIntegrator:
    def test_equilibrium(self):
        out = double_integrator_deriv(AgentState(np.zeros(2), np.zeros(2)), np.zeros(2))
        np.testing.assert_array_equal(out.p, 0)
        np.testing.assert_array_equal(out.v, 0)

    def test_substitution(self):
        out = double_integrator_deriv(AgentState(np.array([9.0, -3.0]), np.array([1.0, 2.0])), [3, 4])
        np.testing.assert_array_equal(out.p, [1, 2])
        np.testing.assert_array_equal(out.v, [3, 4])


def _di_rhs(u):
    def f(t, s):
        d = double_integrator_deriv(AgentState(s[:2], s[2:]), u)
        return np.concatenate([d.p, d.v])
    return f


class TestRK4:
    def test_zero_field(self):
        s = np.array([1.0, -2.0, 3.0])
        np.testing.assert_array_equal(rk4_step(lambda t, x: np.zeros_like(x), s, 0.0, 0.1), s)

    def test_exponential_step(self):
        h = Fraction(1, 10)
        expected = 1 + h + h**2 / 2 + h**3 / 6 + h**4 / 24
        assert float(expected) == pytest.approx(1.1051708333333333, abs=1e-15)
        out = rk4_step(lambda t, x: x, np.array([1.0]), 0.0, 0.1)
        assert out[0] == pytest.approx(float(expected), abs=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(finite, min_size=6, max_size=6),
        st.floats(1e-4, 0.5),
    )
    def test_exact_on_constant_input_double_integrator(self, vals, dt):
        p0, v0, u = np.array(vals[:2]), np.array(vals[2:4]), np.array(vals[4:])
        out = rk4_step(_di_rhs(u), np.concatenate([p0, v0]), 0.0, dt)
        np.testing.assert_allclose(out[:2], p0 + v0 * dt + 0.5 * u * dt**2, rtol=0, atol=1e-12)
        np.testing.assert_allclose(out[2:], v0 + u * dt, rtol=0, atol=1e-12)

    def test_multi_step_closed_form(self):
        u = np.array([0.7, -1.1])
        s = np.array([0.0, 1.0, 0.5, 0.0])
        f = _di_rhs(u)
        for k in range(1000):
            s = rk4_step(f, s, k * 1e-3, 1e-3)
        np.testing.assert_allclose(s[:2], [0.5 + 0.35, 1.0 - 0.55], atol=1e-12)

    def test_non_finite_reports_component(self):
        def f(t, x):
            out = np.zeros_like(x)
            out[2] = np.inf
            return out
        with pytest.raises(NumericError) as info:
            rk4_step(f, np.zeros(4), 0.0, 0.1)
        assert info.value.index == 2

    def test_rejects_nonpositive_step(self):
        with pytest.raises(InputError):
            rk4_step(lambda t, x: x, np.ones(1), 0.0, 0.0)

    def test_deterministic(self):
        f = lambda t, x: np.sin(t * x) + x**2
        s = np.array([0.1, 0.2, 0.3])
        assert rk4_step(f, s, 0.3, 0.01).tobytes() == rk4_step(f, s, 0.3, 0.01).tobytes()
