"""scikit-learn style wrappers around the planners.

``X`` is the demand matrix (sites x epochs, bps). ``fit`` plans deployments,
flows and relocations; ``score`` re-evaluates the fitted deployments and
relocation plan on a (possibly different) demand matrix and returns the
energy efficiency in bits per joule.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .baselines import dinkelbach_exact, greedy_solver
from .energy import EnergyParams, energy_efficiency
from .flow import solve_fixed_deployment
from .planner import dense_baseline, two_stage_solver
from .scenario import ScenarioGraph
from .traffic import DemandMatrix


class _PlannerBase(BaseEstimator):
    def _check_X(self, X) -> DemandMatrix:
        if not isinstance(self.graph, ScenarioGraph):
            raise TypeError("graph must be a ScenarioGraph")
        X = check_array(X, dtype=float, ensure_min_samples=1, ensure_min_features=1)
        if np.any(X < 0):
            raise ValueError("demands must be non-negative")
        if X.shape[0] != self.graph.n_nodes - 1:
            raise ValueError(f"X has {X.shape[0]} rows, the graph has {self.graph.n_nodes - 1} sites")
        return DemandMatrix(X)

    def _params(self) -> EnergyParams:
        return self.energy if self.energy is not None else EnergyParams()

    def fit(self, X, y=None):
        demand = self._check_X(X)
        res = self._solve(demand, self._params())
        self.result_ = res
        self.deployments_ = [d.deployed for d in res.deployments]
        self.plan_ = res.plan
        self.ee_ = res.ee
        self.n_features_in_ = demand.epochs
        return self

    def score(self, X, y=None) -> float:
        check_is_fitted(self, "result_")
        demand = self._check_X(X)
        if demand.epochs != len(self.deployments_):
            raise ValueError(f"X has {demand.epochs} epochs, fitted plan has {len(self.deployments_)}")
        p = self._params()
        bits = sum(
            solve_fixed_deployment(self.graph, demand.epoch(t), dep, self.max_hops, p.epoch_duration).served_bits
            for t, dep in enumerate(self.deployments_)
        )
        return energy_efficiency(bits, self.plan_, p, self.result_.n_rabs, demand.epochs)


class TwoStagePlanner(_PlannerBase):
    def __init__(self, graph=None, n_rabs=10, max_hops=3, rounding_trials=50, random_state=0, energy=None):
        self.graph = graph
        self.n_rabs = n_rabs
        self.max_hops = max_hops
        self.rounding_trials = rounding_trials
        self.random_state = random_state
        self.energy = energy

    def _solve(self, demand, params):
        return two_stage_solver(self.graph, demand, self.n_rabs, self.max_hops, params,
                                rounding_trials=self.rounding_trials, seed=self.random_state)


class GreedyPlanner(_PlannerBase):
    def __init__(self, graph=None, n_rabs=10, max_hops=3, energy=None):
        self.graph = graph
        self.n_rabs = n_rabs
        self.max_hops = max_hops
        self.energy = energy

    def _solve(self, demand, params):
        return greedy_solver(self.graph, demand, self.n_rabs, self.max_hops, params)


class ExactPlanner(_PlannerBase):
    def __init__(self, graph=None, n_rabs=2, max_hops=3, energy=None):
        self.graph = graph
        self.n_rabs = n_rabs
        self.max_hops = max_hops
        self.energy = energy

    def _solve(self, demand, params):
        return dinkelbach_exact(self.graph, demand, self.n_rabs, self.max_hops, params)


class DensePlanner(_PlannerBase):
    def __init__(self, graph=None, max_hops=3, energy=None):
        self.graph = graph
        self.max_hops = max_hops
        self.energy = energy

    def _solve(self, demand, params):
        return dense_baseline(self.graph, demand, self.max_hops, params)
