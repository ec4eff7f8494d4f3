"""Energy-efficient planning of relocatable aerial base stations over a
hop-limited mmWave backhaul."""

from .baselines import dinkelbach_exact, greedy_solver
from .channel import LinkBudget, link_capacity, path_loss_db, snr_db
from .energy import EnergyParams, RelocationPlan, energy_efficiency, flight_energy, plan_relocations
from .flow import (
    EpochDeployment,
    FractionalFlowSolution,
    exact_flow_oracle,
    price_routes,
    randomized_rounding,
    solve_flow_lp_cg,
    truncated_bellman_ford,
)
from .lp_core import LpProblem, LpSolution, solve_lp
from .planner import SolverResult, dense_baseline, two_stage_solver
from .routes import Route, RouteSet, enumerate_routes
from .scenario import MapConfig, ScenarioGraph, build_manhattan_map, line_of_sight, paper_layout
from .traffic import DemandMatrix, TrafficConfig, generate_demand

__version__ = "0.1.0"
