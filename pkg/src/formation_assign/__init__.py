"""Leader-following formation control with distributed online goal exchange."""

from .assignment import (
    AssignmentSchedule,
    ExchangeEvent,
    GoalMap,
    assignment_step,
    breve_errors,
    compounded_error,
    select_pair,
)
from .controller import ControlGains, ErrorSurfaces, error_surfaces, lyapunov_V
from .dynamics import LeaderSignal, LeaderTrajectory, leader_signal, rk4_step
from .estimator import EstimatorGains, EstimatorState, build_A1, lyapunov_solve, spectral_abscissa
from .graph import (
    CommGraph,
    ControlGraph,
    build_comm_graph,
    check_assumption6,
    exchange_neighbors,
    graph_matrices,
    has_spanning_tree,
)
from .metrics import compute_metrics
from .scenario import ScenarioConfig, load_scenario, scenario_from_dict
from .sim import RunLog, run_scenario

__version__ = "0.1.0"
