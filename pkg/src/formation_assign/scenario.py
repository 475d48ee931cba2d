"""Scenario files: JSON schema, loading and semantic validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .assignment import AssignmentSchedule, GoalMap
from .controller import ControlGains
from .dynamics import TRAJECTORY_KINDS, LeaderTrajectory, assumption1_bounds
from .errors import ConfigError, FormationError
from .estimator import EstimatorGains
from .graph import ControlGraph, build_comm_graph, has_spanning_tree
from .quadrotor import AttitudeGains, QuadParams, ReferenceFilter

SCHEMA_VERSION = 1

_vector = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_matrix = {"type": "array", "items": _vector, "minItems": 1}
_gain = {"oneOf": [{"type": "number", "exclusiveMinimum": 0},
                   {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}}]}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "dimension", "plant", "leader", "initial_positions",
                 "goals", "control_graph", "comm_range", "dt", "t_end", "gains"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "dimension": {"enum": [2, 3]},
        "plant": {"enum": ["double_integrator", "quadrotor"]},
        "leader": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(TRAJECTORY_KINDS)},
                "params": {"type": "object"},
                "C_u0": {"type": "number", "minimum": 0},
                "C_u1": {"type": "number", "minimum": 0},
            },
        },
        "initial_positions": _matrix,
        "initial_velocities": _matrix,
        "goals": _matrix,
        "control_graph": {
            "type": "object",
            "required": ["edges", "leader_flags"],
            "additionalProperties": False,
            "properties": {
                "edges": {"type": "array",
                          "items": {"type": "array", "items": {"type": "integer", "minimum": 1},
                                    "minItems": 2, "maxItems": 2}},
                "leader_flags": {"type": "array", "items": {"enum": [0, 1, True, False]},
                                 "minItems": 1},
            },
        },
        "comm_range": {"type": "number", "exclusiveMinimum": 0},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "t_end": {"type": "number", "exclusiveMinimum": 0},
        "gains": {
            "type": "object",
            "required": ["k1", "k2", "gamma1", "gamma2", "gamma3"],
            "additionalProperties": False,
            "properties": {k: _gain for k in ("k1", "k2", "gamma1", "gamma2", "gamma3")},
        },
        "assignment": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "period": {"type": "number", "exclusiveMinimum": 0},
                "pair_policy": {"enum": ["round_robin", "seeded_random"]},
                "seed": {"type": "integer"},
            },
        },
        "estimator_init": {"enum": ["own_position", "leader", "zero"]},
        "log_every": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "quadrotor": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "params": {"type": "object"},
                "attitude_gains": {"type": "object"},
                "reference_filter": {"type": "object"},
                "initial_attitude": _matrix,
                "perfect_attitude": {"type": "boolean"},
            },
        },
    },
}


@dataclass
class ScenarioConfig:
    name: str
    d: int
    plant: str
    leader: LeaderTrajectory
    initial_positions: np.ndarray
    initial_velocities: np.ndarray
    initial_goals: np.ndarray
    control_graph: ControlGraph
    comm_range: float
    dt: float
    t_end: float
    control_gains: ControlGains
    estimator_gains: EstimatorGains
    schedule: AssignmentSchedule | None
    estimator_init: str = "own_position"
    log_every: int | None = None
    seed: int = 0
    leader_bounds: tuple | None = None
    quad_params: QuadParams = field(default_factory=QuadParams)
    attitude_gains: AttitudeGains = field(default_factory=AttitudeGains)
    reference_filter: ReferenceFilter = field(default_factory=ReferenceFilter)
    initial_attitude: np.ndarray | None = None
    perfect_attitude: bool = False

    @property
    def n(self) -> int:
        return self.initial_positions.shape[0]

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def goals(self) -> GoalMap:
        return GoalMap.initial(self.initial_goals)

    def validate(self):
        """Check the cross-field invariants; raises ``ConfigError``."""
        n, d = self.n, self.d
        for fname, arr in (("initial_positions", self.initial_positions),
                           ("initial_velocities", self.initial_velocities),
                           ("goals", self.initial_goals)):
            if arr.shape != (n, d):
                raise ConfigError(f"expected shape ({n}, {d}), got {arr.shape}", field=fname)
            if not np.all(np.isfinite(arr)):
                raise ConfigError("non-finite entries", field=fname)
        if self.control_graph.n != n:
            raise ConfigError("leader_flags length differs from follower count",
                              field="control_graph.leader_flags")
        if self.leader.dimension != d:
            raise ConfigError(f"leader trajectory is {self.leader.dimension}-D, scenario is {d}-D",
                              field="leader")
        if self.plant == "quadrotor" and d != 3:
            raise ConfigError("quadrotor plant needs dimension 3", field="dimension")
        if not has_spanning_tree(self.control_graph):
            raise ConfigError("control graph has no spanning tree rooted at the leader",
                              field="control_graph")
        comm = build_comm_graph(self.initial_positions, self.comm_range)
        if not self.control_graph.is_subgraph_of(comm):
            bad = self.control_graph.stretched_edges(comm)
            raise ConfigError(f"control edges {bad} exceed the communication range initially",
                              field="control_graph.edges")
        if abs(self.n_steps * self.dt - self.t_end) > 1e-9 * self.t_end or self.n_steps < 1:
            raise ConfigError("t_end must be a positive multiple of dt", field="t_end")
        if self.schedule is not None:
            try:
                self.schedule.period_steps(self.dt)
            except FormationError as exc:
                raise ConfigError(str(exc), field="assignment.period") from exc
        if self.initial_attitude is not None and self.initial_attitude.shape != (n, 3):
            raise ConfigError(f"expected shape ({n}, 3)", field="quadrotor.initial_attitude")


def _per_agent(value, n, fname):
    arr = np.full(n, float(value)) if np.isscalar(value) else np.asarray(value, dtype=float)
    if arr.shape != (n,):
        raise ConfigError(f"expected a scalar or {n} values", field=fname)
    return arr


def _build(doc: dict) -> ScenarioConfig:
    pos = np.asarray(doc["initial_positions"], dtype=float)
    n = pos.shape[0]
    vel = np.asarray(doc.get("initial_velocities", np.zeros_like(pos)), dtype=float)
    g = doc["gains"]
    leader_doc = doc["leader"]
    leader = LeaderTrajectory(leader_doc["kind"], dict(leader_doc.get("params", {})))
    if "C_u0" in leader_doc or "C_u1" in leader_doc:
        bounds = (leader_doc.get("C_u0", np.inf), leader_doc.get("C_u1", np.inf))
    else:
        bounds = assumption1_bounds(leader)
    a_doc = doc.get("assignment", {})
    schedule = None
    if a_doc.get("enabled", True):
        schedule = AssignmentSchedule(
            period=a_doc.get("period", 0.05),
            pair_policy=a_doc.get("pair_policy", "round_robin"),
            seed=a_doc.get("seed", doc.get("seed", 0)),
        )
    cg = doc["control_graph"]
    if len(cg["leader_flags"]) != n:
        raise ConfigError(f"expected {n} leader flags", field="control_graph.leader_flags")
    for idx, (i, j) in enumerate(cg["edges"]):
        if i > n or j > n or i == j:
            raise ConfigError(f"invalid edge ({i}, {j})", field=f"control_graph.edges.{idx}")
    ctrl = ControlGraph.from_edges(n, cg["edges"], cg["leader_flags"])

    q = doc.get("quadrotor", {})
    att = q.get("initial_attitude")
    try:
        cfg = ScenarioConfig(
            name=doc.get("name", "scenario"),
            d=doc["dimension"],
            plant=doc["plant"],
            leader=leader,
            initial_positions=pos,
            initial_velocities=vel,
            initial_goals=np.asarray(doc["goals"], dtype=float),
            control_graph=ctrl,
            comm_range=float(doc["comm_range"]),
            dt=float(doc["dt"]),
            t_end=float(doc["t_end"]),
            control_gains=ControlGains(_per_agent(g["k1"], n, "gains.k1"),
                                       _per_agent(g["k2"], n, "gains.k2")),
            estimator_gains=EstimatorGains(*(_per_agent(g[k], n, f"gains.{k}")
                                             for k in ("gamma1", "gamma2", "gamma3"))),
            schedule=schedule,
            estimator_init=doc.get("estimator_init", "own_position"),
            log_every=doc.get("log_every"),
            seed=doc.get("seed", 0),
            leader_bounds=bounds,
            quad_params=QuadParams(**q.get("params", {})),
            attitude_gains=AttitudeGains(**q.get("attitude_gains", {})),
            reference_filter=ReferenceFilter(**q.get("reference_filter", {})),
            initial_attitude=None if att is None else np.asarray(att, dtype=float),
            perfect_attitude=q.get("perfect_attitude", False),
        )
    except TypeError as exc:
        raise ConfigError(f"unknown parameter: {exc}", field="quadrotor") from exc
    cfg.validate()
    return cfg


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(err.message, field=path)
    try:
        return _build(doc)
    except ConfigError:
        raise
    except (KeyError, ValueError, FormationError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg}", line=exc.lineno) from exc
    cfg = scenario_from_dict(doc)
    if "name" not in doc:
        cfg.name = path.stem
    return cfg
