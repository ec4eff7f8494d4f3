"""Two-stage planning (flow maximisation, then relocation) and the dense
fixed-cell reference."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy import EnergyParams, RelocationPlan, energy_efficiency, plan_relocations
from .flow import (
    randomized_rounding,
    solve_fixed_deployment,
    solve_flow_lp_cg,
)
from .scenario import ScenarioGraph
from .traffic import DemandMatrix

logger = logging.getLogger(__name__)


@dataclass
class SolverResult:
    solver_name: str
    deployments: list
    plan: RelocationPlan
    ee: float
    n_rabs: int
    wall_time: float = 0.0
    dense: bool = False
    traces: list = field(default_factory=list)
    lp_bounds: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def served_bits(self) -> float:
        return float(sum(d.served_bits for d in self.deployments))

    def served_fraction(self, demand: DemandMatrix, eta: float) -> float:
        total = eta * demand.total()
        return self.served_bits / total if total > 0 else 0.0

    def to_dict(self, demand: Optional[DemandMatrix] = None, eta: Optional[float] = None) -> dict:
        out = {
            "solver": self.solver_name,
            "n_rabs": self.n_rabs,
            "ee_bits_per_J": self.ee,
            "served_bits": self.served_bits,
            "epochs": [
                dict(epoch=t, lp_bound_bits=(self.lp_bounds[t] if t < len(self.lp_bounds) else None), **d.to_dict())
                for t, d in enumerate(self.deployments)
            ],
            "energy": {
                "flight_J": self.plan.flight_energy_total,
                "static_J": self.plan.static_energy_total,
                "total_J": self.plan.total_energy,
            },
            "plan": self.plan.to_dict()["transitions"],
        }
        if demand is not None and eta is not None:
            out["demand_bits"] = eta * demand.total()
            out["served_fraction"] = self.served_fraction(demand, eta)
        out.update(self.extras)
        return out


def finish(name: str, graph: ScenarioGraph, deployments: list, n_rabs: int, params: EnergyParams,
           started: float, assignment: str = "lp", **kw) -> SolverResult:
    bits = sum(d.served_bits for d in deployments)
    plan = plan_relocations([d.deployed for d in deployments], graph.positions, params, n_rabs,
                            served_bits=bits, solver=assignment)
    ee = energy_efficiency(bits, plan, params, n_rabs, len(deployments))
    return SolverResult(name, deployments, plan, ee, n_rabs, wall_time=time.perf_counter() - started, **kw)


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(epoch)])


def two_stage_solver(graph: ScenarioGraph, demand: DemandMatrix, n_rabs: int, max_hops: int,
                     params: EnergyParams, *, rounding_trials: int = 50, seed: int = 0,
                     lp_method: str = "simplex", assignment: str = "lp") -> SolverResult:
    """Column-generation LP and randomized rounding per epoch, then the
    minimum-flight relocation plan across epochs."""
    _validate(graph, demand, n_rabs, max_hops)
    start = time.perf_counter()
    eta = params.epoch_duration
    deployments, traces, bounds = [], [], []
    for t in range(demand.epochs):
        d = demand.epoch(t)
        frac = solve_flow_lp_cg(graph, d, n_rabs, max_hops, eta, lp_method=lp_method)
        dep = randomized_rounding(frac, graph, d, n_rabs, max_hops, eta, trials=rounding_trials,
                                  rng=epoch_rng(seed, t), lp_method=lp_method)
        deployments.append(dep)
        traces.append(frac.trace)
        bounds.append(frac.objective)
    res = finish("two-stage", graph, deployments, n_rabs, params, start, assignment,
                 traces=traces, lp_bounds=bounds)
    # rounding deploys at most N sites; record how far below N each epoch ends
    unused = [n_rabs - len(d.deployed) for d in deployments]
    res.extras["unused_rabs_per_epoch"] = unused
    if any(unused):
        logger.info("two-stage: rounding left %s of %d RABSs undeployed per epoch", unused, n_rabs)
    return res


def dense_baseline(graph: ScenarioGraph, demand: DemandMatrix, max_hops: int, params: EnergyParams,
                   *, lp_method: str = "simplex") -> SolverResult:
    """Fixed small cells at every site: routing only, no relocation, static
    energy for one cell per site."""
    start = time.perf_counter()
    eta = params.epoch_duration
    sites = tuple(graph.sites)
    deployments = [solve_fixed_deployment(graph, demand.epoch(t), sites, max_hops, eta, lp_method=lp_method)
                   for t in range(demand.epochs)]
    n = max(len(sites), 1)
    bits = sum(d.served_bits for d in deployments)
    plan = RelocationPlan(transitions=[[] for _ in deployments], flight_energy_total=0.0,
                          static_energy_total=params.static_energy(n, demand.epochs), n_rabs=n,
                          served_bits=bits)
    ee = energy_efficiency(bits, plan, params, n, demand.epochs)
    return SolverResult("dense", deployments, plan, ee, n, wall_time=time.perf_counter() - start, dense=True)


def _validate(graph: ScenarioGraph, demand: DemandMatrix, n_rabs: int, max_hops: int) -> None:
    if n_rabs < 1:
        raise ValueError("N must be >= 1")
    if max_hops < 1:
        raise ValueError("H must be >= 1")
    if demand.n_sites != graph.n_nodes - 1:
        raise ValueError(f"demand has {demand.n_sites} sites, graph has {graph.n_nodes - 1}")
