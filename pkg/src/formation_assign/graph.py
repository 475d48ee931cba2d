"""Communication and control graphs over the follower set.

Followers carry ids ``1..N`` and the leader is node ``0``. Neighbor sets are
stored in tuples indexed by ``id - 1`` so that ``ctrl.neighbors(i)`` reads the
same as the usual set notation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import AssumptionError, InputError, InvariantError


def _check_id(i, n):
    if not 1 <= i <= n:
        raise InputError(f"agent id {i} outside 1..{n}")


@dataclass(frozen=True)
class CommGraph:
    """Undirected range-induced graph among followers."""

    n: int
    neighbor_sets: tuple

    def __post_init__(self):
        if len(self.neighbor_sets) != self.n:
            raise InvariantError("neighbor_sets length must equal n")
        for idx, nbrs in enumerate(self.neighbor_sets):
            i = idx + 1
            if i in nbrs:
                raise InvariantError(f"self-loop at agent {i}")
            for j in nbrs:
                _check_id(j, self.n)
                if i not in self.neighbor_sets[j - 1]:
                    raise InvariantError(f"edge ({i},{j}) is not symmetric")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> CommGraph:
        sets = [set() for _ in range(n)]
        for i, j in edges:
            _check_id(i, n)
            _check_id(j, n)
            if i == j:
                raise InvariantError(f"self-loop at agent {i}")
            sets[i - 1].add(j)
            sets[j - 1].add(i)
        return cls(n, tuple(frozenset(s) for s in sets))

    def neighbors(self, i: int) -> frozenset:
        return self.neighbor_sets[i - 1]

    @property
    def edges(self) -> frozenset:
        return frozenset(
            (i, j) for i in range(1, self.n + 1) for j in self.neighbors(i) if i < j
        )


@dataclass(frozen=True)
class ControlGraph:
    """Edges actually used by the estimator and controller.

    ``follower_neighbors[i-1]`` is the control neighbor set of follower ``i``
    and ``leader_flags[i-1]`` tells whether follower ``i`` listens to the
    leader directly.
    """

    follower_neighbors: tuple
    leader_flags: tuple

    def __post_init__(self):
        n = len(self.follower_neighbors)
        if len(self.leader_flags) != n:
            raise InvariantError("leader_flags length must equal follower count")
        for idx, nbrs in enumerate(self.follower_neighbors):
            i = idx + 1
            if i in nbrs:
                raise InvariantError(f"self-loop at agent {i}")
            for j in nbrs:
                if not 1 <= j <= n:
                    raise InvariantError(f"neighbor id {j} outside 1..{n}")
                if i not in self.follower_neighbors[j - 1]:
                    raise InvariantError(f"control edge ({i},{j}) is not symmetric")

    @classmethod
    def from_edges(
        cls, n: int, edges: Iterable[Sequence[int]], leader_flags: Sequence
    ) -> ControlGraph:
        sets = [set() for _ in range(n)]
        for i, j in edges:
            _check_id(i, n)
            _check_id(j, n)
            if i == j:
                raise InvariantError(f"self-loop at agent {i}")
            sets[i - 1].add(j)
            sets[j - 1].add(i)
        return cls(tuple(frozenset(s) for s in sets), tuple(bool(b) for b in leader_flags))

    @property
    def n(self) -> int:
        return len(self.follower_neighbors)

    def neighbors(self, i: int) -> frozenset:
        return self.follower_neighbors[i - 1]

    def leader(self, i: int) -> bool:
        return self.leader_flags[i - 1]

    @property
    def edges(self) -> list:
        """Sorted list of follower pairs ``(i, j)`` with ``i < j``."""
        return sorted(
            (i, j) for i in range(1, self.n + 1) for j in self.neighbors(i) if i < j
        )

    def is_subgraph_of(self, comm: CommGraph) -> bool:
        return all(
            self.neighbors(i) <= comm.neighbors(i) for i in range(1, self.n + 1)
        )

    def stretched_edges(self, comm: CommGraph) -> list:
        """Control edges no longer present in ``comm``."""
        return [(i, j) for i, j in self.edges if j not in comm.neighbors(i)]


@dataclass(frozen=True)
class GraphMatrices:
    adjacency: np.ndarray
    laplacian: np.ndarray
    leader_matrix: np.ndarray
    H: np.ndarray


def build_comm_graph(positions, comm_range: float) -> CommGraph:
    """Connect every follower pair whose distance is at most ``comm_range``."""
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[0] < 1:
        raise InputError("positions must be an (N, d) array with N >= 1")
    if not np.all(np.isfinite(pos)):
        raise InputError("positions contain non-finite coordinates")
    if not comm_range > 0:
        raise InputError("communication range must be positive")
    n = pos.shape[0]
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    within = dist <= comm_range
    np.fill_diagonal(within, False)
    sets = tuple(frozenset(int(j) + 1 for j in np.flatnonzero(row)) for row in within)
    return CommGraph(n, sets)


def graph_matrices(ctrl: ControlGraph) -> GraphMatrices:
    n = ctrl.n
    A = np.zeros((n, n))
    for i in range(1, n + 1):
        for j in ctrl.neighbors(i):
            A[i - 1, j - 1] = 1.0
    if not np.array_equal(A, A.T):
        raise InvariantError("control adjacency is not symmetric")
    L = np.diag(A.sum(axis=1)) - A
    B = np.diag(np.asarray(ctrl.leader_flags, dtype=float))
    return GraphMatrices(A, L, B, L + B)


def has_spanning_tree(ctrl: ControlGraph) -> bool:
    """Breadth-first reachability from the leader through the control graph."""
    n = ctrl.n
    seen = set()
    queue = deque(i for i in range(1, n + 1) if ctrl.leader(i))
    seen.update(queue)
    while queue:
        i = queue.popleft()
        for j in ctrl.neighbors(i):
            if j not in seen:
                seen.add(j)
                queue.append(j)
    return len(seen) == n


def h_min_eigenvalue(ctrl: ControlGraph) -> float:
    """Smallest eigenvalue of ``L_F + B``; positive iff a spanning tree exists."""
    return float(np.linalg.eigvalsh(graph_matrices(ctrl).H)[0])


def check_assumption6(comm: CommGraph, ctrl: ControlGraph, a: int, b: int) -> bool:
    """Whether each of ``a``, ``b`` can reach the other's control neighbors."""
    return (ctrl.neighbors(a) - {b}) <= comm.neighbors(b) and (
        ctrl.neighbors(b) - {a}
    ) <= comm.neighbors(a)


def exchange_neighbors(
    ctrl: ControlGraph, a: int, b: int, comm: CommGraph | None = None
) -> ControlGraph:
    """Hand ``a`` the control neighborhood of ``b`` and vice versa.

    Third-party neighbors of either agent are rewired so the result stays
    undirected, and the leader flags follow the swap. When ``comm`` is given,
    the exchange precondition is checked against it first.
    """
    n = ctrl.n
    _check_id(a, n)
    _check_id(b, n)
    if a == b:
        raise InputError("exchange needs two distinct agents")
    if comm is not None and not check_assumption6(comm, ctrl, a, b):
        raise AssumptionError(f"agents {a} and {b} cannot see each other's neighbors")

    na, nb = ctrl.neighbors(a), ctrl.neighbors(b)
    new_a = (nb - {a}) | {b} if a in nb else nb
    new_b = (na - {b}) | {a} if b in na else na

    sets = list(ctrl.follower_neighbors)
    sets[a - 1] = frozenset(new_a)
    sets[b - 1] = frozenset(new_b)
    for m in (na | nb) - {a, b}:
        nm = set(ctrl.neighbors(m)) - {a, b}
        if m in new_a:
            nm.add(a)
        if m in new_b:
            nm.add(b)
        sets[m - 1] = frozenset(nm)

    flags = list(ctrl.leader_flags)
    flags[a - 1], flags[b - 1] = flags[b - 1], flags[a - 1]
    try:
        return ControlGraph(tuple(sets), tuple(flags))
    except InvariantError as exc:
        raise InvariantError(f"exchange ({a},{b}) broke graph invariants: {exc}") from exc
