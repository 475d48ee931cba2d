"""Distributed third-order leader estimator and its offline stability checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericError
from .graph import ControlGraph, GraphMatrices, graph_matrices


@dataclass(frozen=True)
class EstimatorState:
    """Per-follower leader estimates, each an ``(N, d)`` array."""

    p_hat: np.ndarray
    v_hat: np.ndarray
    u_hat: np.ndarray


@dataclass(frozen=True)
class EstimatorGains:
    gamma1: np.ndarray
    gamma2: np.ndarray
    gamma3: np.ndarray

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "gamma3"):
            g = np.asarray(getattr(self, name), dtype=float)
            if g.ndim != 1 or not np.all(g > 0):
                raise InputError(f"{name} must be a vector of positive gains")
            object.__setattr__(self, name, g)

    @classmethod
    def uniform(cls, n, gamma1, gamma2, gamma3):
        return cls(np.full(n, gamma1, float), np.full(n, gamma2, float), np.full(n, gamma3, float))


@dataclass(frozen=True)
class EstimationErrors:
    p_tilde: np.ndarray
    v_tilde: np.ndarray
    u_tilde: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.p_tilde.ravel(), self.v_tilde.ravel(), self.u_tilde.ravel()])


def estimator_deriv(est, ctrl, leader, gains, matrices=None) -> EstimatorState:
    """Right-hand side of the estimator for every follower.

    Each row only combines the follower's own estimate, its control
    neighbors' estimates and, when it has a leader edge, the leader signal.
    ``matrices`` may be passed in to skip rebuilding them from ``ctrl``.
    """
    if matrices is None:
        matrices = graph_matrices(ctrl)
    d = est.p_hat.shape[1]
    stacked = np.hstack([est.p_hat, est.v_hat, est.u_hat])
    u_hat_dot = stacked_rhs(
        stacked, matrices.H, np.diag(matrices.leader_matrix)[:, None],
        np.concatenate([leader.p0, leader.v0, leader.u0]), gain_columns(gains, d),
    )
    return EstimatorState(est.v_hat, est.u_hat, u_hat_dot)


def gain_columns(gains: EstimatorGains, d: int) -> np.ndarray:
    """``(N, 3d)`` matrix repeating each follower's three gains ``d`` times."""
    return np.repeat(np.column_stack([gains.gamma1, gains.gamma2, gains.gamma3]), d, axis=1)


def stacked_rhs(stacked, H, b, leader_terms, gamma_cols):
    """Estimated-jerk rows from per-follower rows ``[p_hat, v_hat, u_hat]``.

    Row ``i`` of ``H @ x`` equals ``sum_j a_ij (x_i - x_j) + b_i x_i``, so
    only control neighbors and, through ``b``, the leader enter row ``i``.
    """
    weighted = gamma_cols * (H @ stacked - b * leader_terms)
    d = stacked.shape[1] // 3
    return -(weighted[:, :d] + weighted[:, d:2 * d] + weighted[:, 2 * d:])


def build_A1(matrices: GraphMatrices, gains: EstimatorGains, d: int) -> np.ndarray:
    """Companion-block matrix of the stacked estimation-error dynamics."""
    H = np.asarray(matrices.H, dtype=float)
    n = H.shape[0]
    for g in (gains.gamma1, gains.gamma2, gains.gamma3):
        if g.shape != (n,):
            raise InputError(f"gain vector length {g.shape} does not match N={n}")
    if d < 1:
        raise InputError("dimension must be positive")
    Hk = np.kron(H, np.eye(d))
    lift = lambda g: np.kron(np.diag(g), np.eye(d))
    m = n * d
    Z, I = np.zeros((m, m)), np.eye(m)
    return np.block(
        [
            [Z, I, Z],
            [Z, Z, I],
            [-lift(gains.gamma1) @ Hk, -lift(gains.gamma2) @ Hk, -lift(gains.gamma3) @ Hk],
        ]
    )


def build_A2(n: int, u0_dot) -> np.ndarray:
    u0_dot = np.asarray(u0_dot, dtype=float)
    m = n * u0_dot.size
    return np.concatenate([np.zeros(2 * m), -np.tile(u0_dot, n)])


def spectral_abscissa(A) -> float:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError("spectral abscissa needs a square matrix")
    if not np.all(np.isfinite(A)):
        raise NumericError("matrix has non-finite entries")
    try:
        eig = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue iteration failed: {exc}") from exc
    return float(np.max(eig.real))


def lyapunov_solve(A, Q) -> np.ndarray:
    """Solve ``A.T @ P + P @ A = -Q`` by vectorizing with Kronecker products.

    Only meant for the modest sizes met in offline analysis: the linear
    system has ``n**2`` unknowns.
    """
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = A.shape[0]
    if Q.shape != (n, n):
        raise InputError("Q must match A in shape")
    if not np.allclose(Q, Q.T) or np.linalg.eigvalsh(0.5 * (Q + Q.T))[0] <= 0:
        raise InputError("Q must be symmetric positive definite")
    if spectral_abscissa(A) >= 0:
        raise InputError("A is not Hurwitz; the Lyapunov equation has no PD solution")
    I = np.eye(n)
    # row-major vec: vec(A.T P) = kron(A.T, I) vec(P), vec(P A) = kron(I, A.T) vec(P)
    K = np.kron(A.T, I) + np.kron(I, A.T)
    try:
        x = np.linalg.solve(K, -Q.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"Lyapunov system is singular: {exc}") from exc
    P = x.reshape(n, n)
    return 0.5 * (P + P.T)


def lyapunov_residual(A, P, Q) -> float:
    """Frobenius norm of ``A.T P + P A + Q``."""
    return float(np.linalg.norm(A.T @ P + P @ A + Q))


def estimation_errors(est: EstimatorState, leader) -> EstimationErrors:
    return EstimationErrors(
        est.p_hat - leader.p0, est.v_hat - leader.v0, est.u_hat - leader.u0
    )


def initial_estimates(positions, mode="own_position", leader=None) -> EstimatorState:
    """Starting estimator state.

    ``own_position`` seeds the position estimate with each follower's own
    position, ``leader`` with the leader's initial signal, ``zero`` with zeros.
    Velocity and acceleration estimates start at zero except in ``leader`` mode.
    """
    pos = np.asarray(positions, dtype=float)
    zeros = np.zeros_like(pos)
    if mode == "own_position":
        return EstimatorState(pos.copy(), zeros, zeros.copy())
    if mode == "zero":
        return EstimatorState(zeros, zeros.copy(), zeros.copy())
    if mode == "leader":
        if leader is None:
            raise InputError("leader mode needs the initial leader signal")
        ones = np.ones((pos.shape[0], 1))
        return EstimatorState(ones * leader.p0, ones * leader.v0, ones * leader.u0)
    raise InputError(f"unknown estimator initialization {mode!r}")


def stability_report(ctrl: ControlGraph, gains: EstimatorGains, d: int) -> dict:
    """Spectrum of the estimator error matrix and a Lyapunov certificate.

    The coordinates decouple (the full matrix is ``kron(A1_axis, I_d)``), so
    the Lyapunov equation is solved once per axis with ``Q = I`` and lifted.
    """
    matrices = graph_matrices(ctrl)
    A_axis = build_A1(matrices, gains, 1)
    P_axis = lyapunov_solve(A_axis, np.eye(A_axis.shape[0]))
    A = np.kron(A_axis, np.eye(d))
    P = np.kron(P_axis, np.eye(d))
    eig = np.linalg.eigvals(A_axis)
    order = np.lexsort((eig.imag, eig.real))
    return {
        "spectral_abscissa": spectral_abscissa(A_axis),
        "eigenvalues": [[float(z.real), float(z.imag)] for z in eig[order]],
        "lyapunov_residual": lyapunov_residual(A, P, np.eye(A.shape[0])),
        "lyapunov_P_min_eigenvalue": float(np.linalg.eigvalsh(P_axis)[0]),
        "H_min_eigenvalue": float(np.linalg.eigvalsh(matrices.H)[0]),
    }
