"""Backstepping formation controller built on the leader estimates.

All functions broadcast over a leading agent axis: per-agent gains may be
scalars or ``(N, 1)`` columns against ``(N, d)`` error arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class ControlGains:
    k1: np.ndarray
    k2: np.ndarray

    def __post_init__(self):
        for name in ("k1", "k2"):
            k = np.asarray(getattr(self, name), dtype=float)
            if k.ndim != 1 or not np.all(k > 0):
                raise InputError(f"{name} must be a vector of positive gains")
            object.__setattr__(self, name, k)
        if self.k1.shape != self.k2.shape:
            raise InputError("k1 and k2 must have the same length")

    @classmethod
    def uniform(cls, n, k1, k2):
        return cls(np.full(n, k1, float), np.full(n, k2, float))

    @property
    def k_m(self) -> float:
        return float(min(self.k1.min(), self.k2.min()))


@dataclass(frozen=True)
class ErrorSurfaces:
    e1: np.ndarray
    e2: np.ndarray


def virtual_control(e1, v_hat, k1):
    return -k1 * e1 + v_hat


def virtual_control_rate(e1, e2, u_hat, k1):
    """Time derivative of the virtual control with piecewise-constant goals.

    Uses ``d/dt e1 = -k1*e1 + e2`` and ``d/dt v_hat = u_hat``.
    """
    return -k1 * (-k1 * e1 + e2) + u_hat


def actual_control(e1, e2, zeta_dot, k2):
    return -k2 * e2 - e1 + zeta_dot


def error_surfaces(p, v, est, goals, gains: ControlGains) -> ErrorSurfaces:
    """Position and velocity error surfaces for all followers.

    ``p``, ``v`` and ``goals`` are ``(N, d)`` arrays; ``est`` carries the
    followers' leader estimates.
    """
    k1 = gains.k1[:, None]
    e1 = p - est.p_hat - goals
    e2 = v - virtual_control(e1, est.v_hat, k1)
    return ErrorSurfaces(e1, e2)


def control_inputs(surf: ErrorSurfaces, est, gains: ControlGains):
    """Acceleration commands for every follower from its error surfaces."""
    k1, k2 = gains.k1[:, None], gains.k2[:, None]
    zeta_dot = virtual_control_rate(surf.e1, surf.e2, est.u_hat, k1)
    return actual_control(surf.e1, surf.e2, zeta_dot, k2)


def lyapunov_V(e: ErrorSurfaces) -> float:
    e1, e2 = np.ravel(e.e1), np.ravel(e.e2)
    return 0.5 * float(e1 @ e1) + 0.5 * float(e2 @ e2)


def global_formation_error(p, leader, goals):
    return p - leader.p0 - goals


def error_dynamics_matrix(k1: float, k2: float) -> np.ndarray:
    """Per-axis closed-loop matrix acting on ``(e1, e2)``."""
    return np.array([[-k1, 1.0], [-1.0, -k2]])
