"""Simplified quadrotor plant, thrust/attitude inversion and sliding-mode attitude loop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, SingularityError

# column layout of a quadrotor state row
X, Y, Z, VX, VY, VZ, PHI, THETA, PSI, DPHI, DTHETA, DPSI = range(12)
STATE_DIM = 12


@dataclass(frozen=True)
class QuadParams:
    """Rigid-body parameters; defaults are the reference airframe."""

    m: float = 0.486
    g: float = 9.81
    Ixx: float = 3.827e-3
    Iyy: float = 3.827e-3
    Izz: float = 7.6566e-3
    arm: float = 0.1

    def __post_init__(self):
        for name in ("m", "g", "Ixx", "Iyy", "Izz", "arm"):
            if not getattr(self, name) > 0:
                raise InputError(f"quadrotor parameter {name} must be positive")

    @property
    def a1(self):
        return (self.Iyy - self.Izz) / self.Ixx

    @property
    def a2(self):
        return (self.Izz - self.Ixx) / self.Iyy

    @property
    def a3(self):
        return (self.Ixx - self.Iyy) / self.Izz

    @property
    def b1(self):
        return self.arm / self.Ixx

    @property
    def b2(self):
        return self.arm / self.Iyy

    @property
    def b3(self):
        return 1.0 / self.Izz


@dataclass(frozen=True)
class QuadState:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0
    phi_dot: float = 0.0
    theta_dot: float = 0.0
    psi_dot: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in self.__dataclass_fields__])

    @classmethod
    def from_array(cls, a) -> QuadState:
        return cls(*map(float, a))


@dataclass(frozen=True)
class QuadInputs:
    U_phi: float
    U_theta: float
    U_psi: float
    U_z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.U_phi, self.U_theta, self.U_psi, self.U_z])


@dataclass(frozen=True)
class AttitudeGains:
    lambda_phi: float = 100.0
    lambda_theta: float = 100.0
    lambda_psi: float = 100.0
    k_phi: float = 5.0
    k_theta: float = 5.0
    k_psi: float = 5.0
    boundary_layer: float = 0.01
    use_sign: bool = False

    def __post_init__(self):
        for name in ("lambda_phi", "lambda_theta", "lambda_psi", "k_phi", "k_theta", "k_psi",
                     "boundary_layer"):
            if not getattr(self, name) > 0:
                raise InputError(f"attitude gain {name} must be positive")

    @property
    def lambdas(self):
        return np.array([self.lambda_phi, self.lambda_theta, self.lambda_psi])

    @property
    def ks(self):
        return np.array([self.k_phi, self.k_theta, self.k_psi])


def quad_deriv(s, u, params: QuadParams) -> np.ndarray:
    """Time derivative of one or many quadrotor states.

    ``s`` is ``(..., 12)`` and ``u`` is ``(..., 4)`` ordered
    ``(U_phi, U_theta, U_psi, U_z)``.
    """
    s = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    phi, theta, psi = s[..., PHI], s[..., THETA], s[..., PSI]
    dphi, dtheta, dpsi = s[..., DPHI], s[..., DTHETA], s[..., DPSI]
    U_phi, U_theta, U_psi, U_z = (u[..., k] for k in range(4))
    cphi, sphi = np.cos(phi), np.sin(phi)
    cth, sth = np.cos(theta), np.sin(theta)
    cpsi, spsi = np.cos(psi), np.sin(psi)
    thrust = U_z / params.m

    out = np.empty_like(s)
    out[..., X:Z + 1] = s[..., VX:VZ + 1]
    out[..., VX] = (cphi * sth * cpsi + sphi * spsi) * thrust
    out[..., VY] = (cphi * sth * spsi - sphi * cpsi) * thrust
    out[..., VZ] = -params.g + cphi * cth * thrust
    out[..., PHI:PSI + 1] = s[..., DPHI:DPSI + 1]
    out[..., DPHI] = params.a1 * dtheta * dpsi + params.b1 * U_phi
    out[..., DTHETA] = params.a2 * dphi * dpsi + params.b2 * U_theta
    out[..., DPSI] = params.a3 * dphi * dtheta + params.b3 * U_psi
    return out


def desired_attitude(ux, uy, uz, psi_d, g):
    """Roll and pitch that point the thrust along the commanded acceleration."""
    ux, uy, uz, psi_d = np.broadcast_arrays(*map(np.asarray, (ux, uy, uz, psi_d)))
    denom = uz + g
    if np.any(np.abs(denom) < 1e-9):
        raise SingularityError("vertical command cancels gravity; attitude undefined")
    cpsi, spsi = np.cos(psi_d), np.sin(psi_d)
    theta_d = np.arctan((cpsi * ux + spsi * uy) / denom)
    phi_d = np.arctan(np.cos(theta_d) * (spsi * ux - cpsi * uy) / denom)
    return phi_d, theta_d


def total_thrust(ux, uy, uz, m, g):
    return m * np.sqrt(ux**2 + uy**2 + (uz + g) ** 2)


def _sat(x, use_sign):
    return np.sign(x) if use_sign else np.clip(x, -1.0, 1.0)


def sliding_surfaces(s, refs, gains: AttitudeGains):
    """``s_q = (q_dot - q_dot_d) + lambda_q (q - q_d)`` for roll, pitch, yaw.

    ``refs`` is ``(..., 3, 3)``: rows are the angles, columns are value, rate
    and acceleration of the reference.
    """
    s = np.asarray(s, dtype=float)
    refs = np.asarray(refs, dtype=float)
    err = s[..., PHI:PSI + 1] - refs[..., 0]
    derr = s[..., DPHI:DPSI + 1] - refs[..., 1]
    return derr + gains.lambdas * err


def sliding_attitude_control(s, refs, gains: AttitudeGains, params: QuadParams):
    """Moments ``(U_phi, U_theta, U_psi)`` from the sliding-mode law.

    The gyroscopic terms of the plant are cancelled, so each angle error obeys
    ``ds/dt = -k * sat(s / eps)`` in closed loop.
    """
    s = np.asarray(s, dtype=float)
    refs = np.asarray(refs, dtype=float)
    surf = sliding_surfaces(s, refs, gains)
    dphi, dtheta, dpsi = s[..., DPHI], s[..., DTHETA], s[..., DPSI]
    coupling = np.stack(
        [params.a1 * dtheta * dpsi, params.a2 * dphi * dpsi, params.a3 * dphi * dtheta], axis=-1
    )
    derr = s[..., DPHI:DPSI + 1] - refs[..., 1]
    accel = (
        -coupling
        - gains.ks * _sat(surf / gains.boundary_layer, gains.use_sign)
        - gains.lambdas * derr
        + refs[..., 2]
    )
    return accel / np.array([params.b1, params.b2, params.b3])


@dataclass(frozen=True)
class ReferenceFilter:
    """Critically damped second-order prefilter for the attitude commands."""

    omega: float = 50.0
    damping: float = 1.0

    def deriv(self, r, r_dot, command):
        r_ddot = self.omega**2 * (command - r) - 2.0 * self.damping * self.omega * r_dot
        return r_dot, r_ddot


def quad_outer_loop(quad_states, filter_states, accel_cmd, gains: AttitudeGains,
                    params: QuadParams, ref_filter: ReferenceFilter, psi_d=0.0):
    """Turn virtual accelerations into full quadrotor inputs.

    ``quad_states`` is ``(N, 12)``; ``filter_states`` is ``(N, 4)`` holding
    ``(phi_r, phi_r_dot, theta_r, theta_r_dot)``; ``accel_cmd`` is ``(N, 3)``.
    Returns ``(inputs (N, 4), filter_deriv (N, 4))``.
    """
    ux, uy, uz = accel_cmd[:, 0], accel_cmd[:, 1], accel_cmd[:, 2]
    phi_cmd, theta_cmd = desired_attitude(ux, uy, uz, psi_d, params.g)
    U_z = total_thrust(ux, uy, uz, params.m, params.g)

    phi_r, phi_rd, th_r, th_rd = (filter_states[:, k] for k in range(4))
    _, phi_rdd = ref_filter.deriv(phi_r, phi_rd, phi_cmd)
    _, th_rdd = ref_filter.deriv(th_r, th_rd, theta_cmd)

    n = quad_states.shape[0]
    refs = np.zeros((n, 3, 3))
    refs[:, 0] = np.stack([phi_r, phi_rd, phi_rdd], axis=-1)
    refs[:, 1] = np.stack([th_r, th_rd, th_rdd], axis=-1)
    refs[:, 2, 0] = psi_d
    moments = sliding_attitude_control(quad_states, refs, gains, params)

    inputs = np.column_stack([moments, U_z])
    filter_deriv = np.column_stack([phi_rd, phi_rdd, th_rd, th_rdd])
    return inputs, filter_deriv


def translational_accel(phi, theta, psi, U_z, params: QuadParams):
    """Acceleration produced by a given attitude and thrust."""
    cphi, sphi = np.cos(phi), np.sin(phi)
    cth, sth = np.cos(theta), np.sin(theta)
    cpsi, spsi = np.cos(psi), np.sin(psi)
    thrust = U_z / params.m
    return np.stack(
        [
            (cphi * sth * cpsi + sphi * spsi) * thrust,
            (cphi * sth * spsi - sphi * cpsi) * thrust,
            -params.g + cphi * cth * thrust,
        ],
        axis=-1,
    )
