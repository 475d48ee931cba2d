"""Fixed-step closed-loop simulation with periodic goal-exchange proposals.

Plant and estimator share one state vector and one RK4 grid, so exchange
instants fall on grid points and the state at the end of a step is the
left limit used by the exchange test.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import quadrotor as quad
from .assignment import GoalMap, assignment_step, select_pair
from .controller import (
    control_inputs,
    error_surfaces,
    global_formation_error,
    lyapunov_V,
)
from .dynamics import leader_signal, rk4_step
from .errors import RunAbort
from .estimator import EstimatorState, gain_columns, initial_estimates, stacked_rhs
from .graph import build_comm_graph, graph_matrices, has_spanning_tree
from .scenario import ScenarioConfig

log = logging.getLogger(__name__)

QUAD_WIDTH = quad.STATE_DIM + 4


@dataclass
class RunLog:
    """Logged trajectory of one run.

    Per-record arrays share a leading time axis. ``slots[k, i]`` is the index
    of the initial goal held by follower ``i+1`` at record ``k``. Accepted
    exchanges are always logged, so their records sit exactly at ``tau``.
    """

    t: np.ndarray
    p: np.ndarray
    v: np.ndarray
    p_hat: np.ndarray
    v_hat: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    V: np.ndarray
    delta: np.ndarray
    p_tilde: np.ndarray
    slots: np.ndarray
    events: list
    event_V: list
    control_graphs: list
    warnings: list = field(default_factory=list)
    attitude: np.ndarray | None = None

    @property
    def accepted_events(self):
        return [ev for ev in self.events if ev.accepted]

    def index_of(self, t: float) -> int:
        k = int(np.searchsorted(self.t, t - 1e-12))
        if k >= self.t.size or abs(self.t[k] - t) > 1e-9:
            raise KeyError(f"no record at t={t}")
        return k


def _default_log_every(n):
    return 1 if n <= 20 else 10


class _Layout:
    """Views into the flat state vector ``[plant rows | estimator rows]``.

    Estimator rows hold ``[p_hat_i, v_hat_i, u_hat_i]`` per follower.
    """

    def __init__(self, n, d, plant_width):
        self.n, self.d, self.w = n, d, plant_width
        self.plant_size = n * plant_width

    def plant(self, x):
        return x[: self.plant_size].reshape(self.n, self.w)

    def est_block(self, x):
        return x[self.plant_size:].reshape(self.n, 3 * self.d)

    def estimates(self, x):
        blk, d = self.est_block(x), self.d
        return EstimatorState(blk[:, :d], blk[:, d:2 * d], blk[:, 2 * d:])

    def pack(self, plant, est):
        return np.concatenate([plant.ravel(), np.hstack([est.p_hat, est.v_hat, est.u_hat]).ravel()])


def _plant_pv(cfg, plant):
    if cfg.plant == "quadrotor":
        return plant[:, quad.X:quad.Z + 1], plant[:, quad.VX:quad.VZ + 1]
    d = cfg.d
    return plant[:, :d], plant[:, d:]


def _initial_state(cfg: ScenarioConfig, layout: _Layout):
    p0, v0 = cfg.initial_positions, cfg.initial_velocities
    if cfg.plant == "quadrotor":
        plant = np.zeros((cfg.n, QUAD_WIDTH))
        plant[:, quad.X:quad.Z + 1] = p0
        plant[:, quad.VX:quad.VZ + 1] = v0
        if cfg.initial_attitude is not None:
            plant[:, quad.PHI:quad.PSI + 1] = cfg.initial_attitude
            plant[:, quad.STATE_DIM] = cfg.initial_attitude[:, 0]
            plant[:, quad.STATE_DIM + 2] = cfg.initial_attitude[:, 1]
    else:
        plant = np.hstack([p0, v0])
    est = initial_estimates(p0, cfg.estimator_init, leader_signal(cfg.leader, 0.0))
    return layout.pack(plant, est)


def _edge_index(ctrl):
    return np.array(ctrl.edges, dtype=int).reshape(-1, 2) - 1


def _make_rhs(cfg: ScenarioConfig, layout: _Layout, ctrl, goals: np.ndarray):
    matrices = graph_matrices(ctrl)
    H = matrices.H
    b = np.diag(matrices.leader_matrix)[:, None]
    gamma_cols = gain_columns(cfg.estimator_gains, cfg.d)
    gains = cfg.control_gains
    d = cfg.d

    def rhs(t, x):
        plant = layout.plant(x)
        blk = layout.est_block(x)
        est = EstimatorState(blk[:, :d], blk[:, d:2 * d], blk[:, 2 * d:])
        leader = leader_signal(cfg.leader, t)
        jerk = stacked_rhs(blk, H, b, np.concatenate([leader.p0, leader.v0, leader.u0]),
                           gamma_cols)
        p, v = _plant_pv(cfg, plant)
        u = control_inputs(error_surfaces(p, v, est, goals, gains), est, gains)
        if cfg.plant == "quadrotor":
            plant_dot = _quad_rhs(cfg, plant, u)
        else:
            plant_dot = np.hstack([v, u])
        return np.concatenate([plant_dot.ravel(), np.hstack([blk[:, d:], jerk]).ravel()])

    return rhs


def _quad_rhs(cfg, plant, accel_cmd):
    qs = plant[:, :quad.STATE_DIM]
    fs = plant[:, quad.STATE_DIM:]
    prm = cfg.quad_params
    if cfg.perfect_attitude:
        phi_d, theta_d = quad.desired_attitude(accel_cmd[:, 0], accel_cmd[:, 1],
                                               accel_cmd[:, 2], 0.0, prm.g)
        U_z = quad.total_thrust(accel_cmd[:, 0], accel_cmd[:, 1], accel_cmd[:, 2], prm.m, prm.g)
        out = np.zeros_like(plant)
        out[:, quad.X:quad.Z + 1] = qs[:, quad.VX:quad.VZ + 1]
        out[:, quad.VX:quad.VZ + 1] = quad.translational_accel(phi_d, theta_d, 0.0, U_z, prm)
        return out
    inputs, filter_dot = quad.quad_outer_loop(qs, fs, accel_cmd, cfg.attitude_gains, prm,
                                              cfg.reference_filter)
    return np.hstack([quad.quad_deriv(qs, inputs, prm), filter_dot])


def run_scenario(cfg: ScenarioConfig, assignment: bool | None = None,
                 log_every: int | None = None) -> RunLog:
    """Integrate the closed loop from ``t = 0`` to ``cfg.t_end``.

    ``assignment=False`` disables goal exchange regardless of the scenario;
    ``None`` follows the scenario's schedule.
    """
    n, d, dt = cfg.n, cfg.d, cfg.dt
    width = QUAD_WIDTH if cfg.plant == "quadrotor" else 2 * d
    layout = _Layout(n, d, width)
    schedule = cfg.schedule if assignment is not False else None
    if assignment and schedule is None:
        raise RunAbort("assignment requested but the scenario declares no schedule")
    every = schedule.period_steps(dt) if schedule is not None and n >= 2 else None
    log_every = log_every or cfg.log_every or _default_log_every(n)
    gains = cfg.control_gains

    ctrl = cfg.control_graph
    goal_map = GoalMap.initial(cfg.initial_goals)
    x = _initial_state(cfg, layout)
    rhs = _make_rhs(cfg, layout, ctrl, goal_map.goals)

    rec = {k: [] for k in ("t", "p", "v", "p_hat", "v_hat", "e1", "e2", "V", "delta",
                           "p_tilde", "slots", "attitude")}
    events, event_V, graphs, warnings = [], [], [(0.0, ctrl)], []
    stretched_seen = set()
    edge_idx = _edge_index(ctrl)
    bounds = cfg.leader_bounds

    def snapshot(t, x, surf=None):
        plant = layout.plant(x)
        est = layout.estimates(x)
        p, v = _plant_pv(cfg, plant)
        leader = leader_signal(cfg.leader, t)
        if surf is None:
            surf = error_surfaces(p, v, est, goal_map.goals, gains)
        rec["t"].append(t)
        rec["p"].append(p.copy())
        rec["v"].append(v.copy())
        rec["p_hat"].append(est.p_hat.copy())
        rec["v_hat"].append(est.v_hat.copy())
        rec["e1"].append(surf.e1)
        rec["e2"].append(surf.e2)
        rec["V"].append(lyapunov_V(surf))
        rec["delta"].append(global_formation_error(p, leader, goal_map.goals))
        rec["p_tilde"].append(est.p_hat - leader.p0)
        rec["slots"].append(goal_map.slots)
        if cfg.plant == "quadrotor":
            rec["attitude"].append(plant[:, quad.PHI:quad.PSI + 1].copy())
        if bounds is not None:
            u0n, u1n = np.linalg.norm(leader.u0), np.linalg.norm(leader.u0_dot)
            if u0n > bounds[0] * (1 + 1e-12) + 1e-15 or u1n > bounds[1] * (1 + 1e-12) + 1e-15:
                warnings.append(f"t={t:.6g}: leader exceeds declared acceleration bounds")

    snapshot(0.0, x)
    k_instant = 0
    n_steps = cfg.n_steps
    for step in range(1, n_steps + 1):
        x = rk4_step(rhs, x, (step - 1) * dt, dt)
        t = step * dt
        plant = layout.plant(x)
        p, v = _plant_pv(cfg, plant)
        if edge_idx.size:
            gap = p[edge_idx[:, 0]] - p[edge_idx[:, 1]]
            too_long = np.einsum("ij,ij->i", gap, gap) > cfg.comm_range**2
            for i, j in edge_idx[too_long] + 1:
                edge = (int(i), int(j))
                if edge not in stretched_seen:
                    stretched_seen.add(edge)
                    msg = f"t={t:.6g}: control edge {edge} stretched beyond range {cfg.comm_range}"
                    log.warning(msg)
                    warnings.append(msg)

        accepted = False
        if every is not None and step % every == 0:
            comm = build_comm_graph(p, cfg.comm_range)
            pair = select_pair(schedule, k_instant, n)
            k_instant += 1
            est = layout.estimates(x)
            surf = error_surfaces(p, v, est, goal_map.goals, gains)
            new_ctrl, new_goals, ev = assignment_step(
                t, comm, ctrl, goal_map, p, v, est, gains, pair, surfaces=surf
            )
            events.append(ev)
            if ev.accepted:
                V_before = lyapunov_V(surf)
                ctrl, goal_map = new_ctrl, new_goals
                if not has_spanning_tree(ctrl):
                    raise RunAbort(f"t={t:.6g}: control graph lost its spanning tree")
                rhs = _make_rhs(cfg, layout, ctrl, goal_map.goals)
                edge_idx = _edge_index(ctrl)
                graphs.append((t, ctrl))
                accepted = True
                snapshot(t, x)
                event_V.append((V_before, rec["V"][-1]))
            else:
                event_V.append((lyapunov_V(surf),) * 2)
        if not accepted and (step % log_every == 0 or step == n_steps):
            snapshot(t, x)

    arrays = {k: np.asarray(vals) for k, vals in rec.items() if k != "attitude"}
    return RunLog(
        **arrays,
        events=events,
        event_V=event_V,
        control_graphs=graphs,
        warnings=warnings,
        attitude=np.asarray(rec["attitude"]) if rec["attitude"] else None,
    )
