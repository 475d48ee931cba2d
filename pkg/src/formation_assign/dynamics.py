"""Follower double-integrator model, leader trajectories and the RK4 step."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InputError, NumericError


@dataclass(frozen=True)
class AgentState:
    p: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class LeaderSignal:
    """Leader position and its first three time derivatives at one instant."""

    p0: np.ndarray
    v0: np.ndarray
    u0: np.ndarray
    u0_dot: np.ndarray


TRAJECTORY_KINDS = ("planar_sine", "helix", "constant_acceleration", "polynomial")


@dataclass(frozen=True)
class LeaderTrajectory:
    """Closed-form leader path.

    Parameters per kind (defaults reproduce the two reference setups):

    * ``planar_sine``: ``p0 = [speed*t, amplitude*sin(omega*t)] + offset``
    * ``helix``: ``p0 = [radius*sin(omega*t), radius*cos(omega*t), climb*t + z0]``
    * ``constant_acceleration``: ``p0 = p + v*t + a*t**2/2``
    * ``polynomial``: ``coefficients[k]`` lists ascending-power coefficients of
      coordinate ``k``.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise InputError(f"unknown leader trajectory kind {self.kind!r}")

    @property
    def dimension(self) -> int:
        if self.kind == "planar_sine":
            return 2
        if self.kind == "helix":
            return 3
        if self.kind == "constant_acceleration":
            return len(self.params["p"])
        return len(self.params["coefficients"])


def _poly_derivs(coeffs, t, order):
    c = np.asarray(coeffs, dtype=float)
    out = []
    for _ in range(order + 1):
        out.append(np.polyval(c[::-1], t) if c.size else 0.0)
        c = c[1:] * np.arange(1, c.size) if c.size > 1 else np.zeros(0)
    return out


def leader_signal(traj: LeaderTrajectory, t: float) -> LeaderSignal:
    if t < 0:
        raise InputError("leader signal requested at negative time")
    prm = traj.params
    if traj.kind == "planar_sine":
        c = prm.get("speed", 0.2)
        amp = prm.get("amplitude", 0.2)
        w = prm.get("omega", 0.5)
        off = np.asarray(prm.get("offset", (0.0, 0.0)), dtype=float)
        s, co = np.sin(w * t), np.cos(w * t)
        return LeaderSignal(
            np.array([c * t, amp * s]) + off,
            np.array([c, amp * w * co]),
            np.array([0.0, -amp * w**2 * s]),
            np.array([0.0, -amp * w**3 * co]),
        )
    if traj.kind == "helix":
        r = prm.get("radius", 10.0)
        w = prm.get("omega", 0.5)
        climb = prm.get("climb", 1.0)
        z0 = prm.get("z0", 30.0)
        s, co = np.sin(w * t), np.cos(w * t)
        return LeaderSignal(
            np.array([r * s, r * co, climb * t + z0]),
            np.array([r * w * co, -r * w * s, climb]),
            np.array([-r * w**2 * s, -r * w**2 * co, 0.0]),
            np.array([-r * w**3 * co, r * w**3 * s, 0.0]),
        )
    if traj.kind == "constant_acceleration":
        p = np.asarray(prm["p"], dtype=float)
        v = np.asarray(prm.get("v", np.zeros_like(p)), dtype=float)
        a = np.asarray(prm.get("a", np.zeros_like(p)), dtype=float)
        return LeaderSignal(p + v * t + 0.5 * a * t**2, v + a * t, a.copy(), np.zeros_like(p))
    derivs = np.array([_poly_derivs(c, t, 3) for c in prm["coefficients"]], dtype=float)
    return LeaderSignal(*(derivs[:, k].copy() for k in range(4)))


def assumption1_bounds(traj: LeaderTrajectory):
    """Analytic ``(C_u0, C_u1)`` for the bounded kinds, ``None`` otherwise."""
    prm = traj.params
    if traj.kind == "planar_sine":
        amp, w = prm.get("amplitude", 0.2), prm.get("omega", 0.5)
        return abs(amp) * w**2, abs(amp) * abs(w) ** 3
    if traj.kind == "helix":
        r, w = prm.get("radius", 10.0), prm.get("omega", 0.5)
        return abs(r) * w**2, abs(r) * abs(w) ** 3
    if traj.kind == "constant_acceleration":
        a = np.asarray(prm.get("a", np.zeros(len(prm["p"]))), dtype=float)
        return float(np.linalg.norm(a)), 0.0
    return None


def double_integrator_deriv(s: AgentState, u) -> AgentState:
    return AgentState(np.asarray(s.v, dtype=float), np.asarray(u, dtype=float))


def rk4_step(f: Callable, s: np.ndarray, t: float, dt: float) -> np.ndarray:
    """Advance ``s' = f(t, s)`` by one classical Runge-Kutta step."""
    if not dt > 0:
        raise InputError("step size must be positive")

    def stage(tt, x):
        k = np.asarray(f(tt, x), dtype=float)
        if not np.isfinite(k).all():
            bad = np.flatnonzero(~np.isfinite(k))
            raise NumericError(
                f"non-finite derivative at t={tt:.6g}, component {int(bad[0])}",
                index=int(bad[0]),
            )
        return k

    k1 = stage(t, s)
    k2 = stage(t + 0.5 * dt, s + 0.5 * dt * k1)
    k3 = stage(t + 0.5 * dt, s + 0.5 * dt * k2)
    k4 = stage(t + dt, s + dt * k3)
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
