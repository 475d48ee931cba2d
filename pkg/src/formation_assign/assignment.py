"""Online pairwise goal exchange with neighbor-set rewiring."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import combinations

import numpy as np

from .controller import ControlGains, error_surfaces, virtual_control
from .errors import InputError, InvariantError
from .graph import (
    CommGraph,
    ControlGraph,
    check_assumption6,
    exchange_neighbors,
    has_spanning_tree,
)

PAIR_POLICIES = ("round_robin", "seeded_random")


@dataclass(frozen=True)
class GoalMap:
    """Current goal of every follower, as a permutation of the initial list.

    ``slots[i]`` is the index into ``initial_goals`` held by follower ``i+1``.
    """

    initial_goals: np.ndarray
    slots: tuple

    @classmethod
    def initial(cls, goals) -> GoalMap:
        g = np.array(goals, dtype=float)
        g.setflags(write=False)
        return cls(g, tuple(range(g.shape[0])))

    def __post_init__(self):
        if sorted(self.slots) != list(range(len(self.initial_goals))):
            raise InvariantError("goal slots are not a permutation")

    @property
    def goals(self) -> np.ndarray:
        return self.initial_goals[list(self.slots)]

    def swapped(self, a: int, b: int) -> GoalMap:
        s = list(self.slots)
        s[a - 1], s[b - 1] = s[b - 1], s[a - 1]
        return GoalMap(self.initial_goals, tuple(s))


@dataclass(frozen=True)
class AssignmentSchedule:
    period: float = 0.05
    pair_policy: str = "round_robin"
    seed: int = 0

    def __post_init__(self):
        if not self.period > 0:
            raise InputError("assignment period must be positive")
        if self.pair_policy not in PAIR_POLICIES:
            raise InputError(f"unknown pair policy {self.pair_policy!r}")

    def period_steps(self, dt: float) -> int:
        steps = round(self.period / dt)
        if steps < 1 or abs(steps * dt - self.period) > 1e-9 * max(1.0, self.period):
            raise InputError(f"assignment period {self.period} is not a multiple of dt={dt}")
        return steps


@dataclass(frozen=True)
class ExchangeEvent:
    tau: float
    alpha: int
    beta: int
    e_cur: float
    e_new: float
    accepted: bool
    reason: str

    def __post_init__(self):
        if self.accepted and not self.e_cur > self.e_new:
            raise InvariantError("accepted exchange must strictly lower the compounded error")

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["t"] = rec.pop("tau")
        return {k: rec[k] for k in ("t", "alpha", "beta", "e_cur", "e_new", "accepted", "reason")}


def select_pair(schedule: AssignmentSchedule, k: int, n: int):
    """Pair proposed at the ``k``-th assignment instant (``k`` starts at 0)."""
    if n < 2:
        raise InputError("pair selection needs at least two followers")
    pairs = list(combinations(range(1, n + 1), 2))
    if schedule.pair_policy == "round_robin":
        return pairs[k % len(pairs)]
    rng = np.random.default_rng([schedule.seed, k])
    return pairs[int(rng.integers(len(pairs)))]


def compounded_error(e1_a, e2_a, e1_b, e2_b) -> float:
    return float(sum(np.dot(x, x) for x in map(np.ravel, (e1_a, e2_a, e1_b, e2_b))))


def breve_errors(p_a, v_a, p_b, v_b, est_a, est_b, goal_a_new, goal_b_new, k1_a, k1_b):
    """Error surfaces of the pair if their goals were exchanged.

    ``est_a``/``est_b`` are ``(p_hat, v_hat)`` pairs: each agent only uses its
    own leader estimate.
    """
    e1_a = p_a - est_a[0] - goal_a_new
    e2_a = v_a - virtual_control(e1_a, est_a[1], k1_a)
    e1_b = p_b - est_b[0] - goal_b_new
    e2_b = v_b - virtual_control(e1_b, est_b[1], k1_b)
    return e1_a, e2_a, e1_b, e2_b


def assignment_step(
    t_k: float,
    comm: CommGraph,
    ctrl: ControlGraph,
    goals: GoalMap,
    p,
    v,
    est,
    gains: ControlGains,
    pair,
    surfaces=None,
):
    """Run one proposal of the exchange protocol on left-limit values at ``t_k``.

    Returns ``(ctrl, goals, event)``; on rejection the inputs come back
    unchanged. ``surfaces`` may carry the error surfaces already computed
    at ``t_k`` so they are not recomputed.
    """
    a, b = pair
    if not check_assumption6(comm, ctrl, a, b):
        return ctrl, goals, ExchangeEvent(t_k, a, b, 0.0, 0.0, False, "assumption6_failed")

    if surfaces is None:
        surfaces = error_surfaces(p, v, est, goals.goals, gains)
    ia, ib = a - 1, b - 1
    e_cur = compounded_error(surfaces.e1[ia], surfaces.e2[ia], surfaces.e1[ib], surfaces.e2[ib])
    g = goals.goals
    e_new = compounded_error(
        *breve_errors(
            p[ia], v[ia], p[ib], v[ib],
            (est.p_hat[ia], est.v_hat[ia]), (est.p_hat[ib], est.v_hat[ib]),
            g[ib], g[ia], gains.k1[ia], gains.k1[ib],
        )
    )
    if not e_cur > e_new:
        return ctrl, goals, ExchangeEvent(t_k, a, b, e_cur, e_new, False, "not_improving")

    new_ctrl = exchange_neighbors(ctrl, a, b, comm)
    lost_subgraph = ctrl.is_subgraph_of(comm) and not new_ctrl.is_subgraph_of(comm)
    if lost_subgraph or has_spanning_tree(new_ctrl) != has_spanning_tree(ctrl):
        raise InvariantError(f"exchange ({a},{b}) at t={t_k} produced an invalid control graph")
    return new_ctrl, goals.swapped(a, b), ExchangeEvent(t_k, a, b, e_cur, e_new, True, "accepted")
