"""Reference planners: the demand-greedy heuristic and an exact Dinkelbach
solver for desk-scale instances."""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from .energy import EnergyParams, plan_relocations
from .flow import OracleBudgetExceeded, enumerate_deployments, hop_distances, min_hop_path, solve_fixed_deployment
from .planner import SolverResult, _validate, finish
from .scenario import ScenarioGraph
from .traffic import DemandMatrix

JOINT_BUDGET = 10**6


def greedy_deployment(graph: ScenarioGraph, demand, n_rabs: int, max_hops: int) -> tuple:
    """Walk sites by decreasing demand (index breaks ties) and add each one's
    fewest-hop path when it fits the hop limit and the RABS budget. Relays on
    the path count against the budget. Zero-demand sites are never targeted."""
    demand = np.asarray(demand, dtype=float)
    dist = hop_distances(graph)
    order = sorted(graph.sites, key=lambda i: (-demand[i], i))
    chosen: set = set()
    for s in order:
        if len(chosen) >= n_rabs or demand[s] <= 0:
            break
        if s in chosen or dist[s] > max_hops:
            continue
        path = min_hop_path(graph, s, dist)
        merged = chosen.union(path.sites)
        if len(merged) <= n_rabs:
            chosen = merged
    return tuple(sorted(chosen))


def greedy_solver(graph: ScenarioGraph, demand: DemandMatrix, n_rabs: int, max_hops: int,
                  params: EnergyParams, *, lp_method: str = "simplex", assignment: str = "lp") -> SolverResult:
    _validate(graph, demand, n_rabs, max_hops)
    start = time.perf_counter()
    eta = params.epoch_duration
    deployments = []
    for t in range(demand.epochs):
        d = demand.epoch(t)
        sites = greedy_deployment(graph, d, n_rabs, max_hops)
        deployments.append(solve_fixed_deployment(graph, d, sites, max_hops, eta, lp_method=lp_method))
    return finish("greedy", graph, deployments, n_rabs, params, start, assignment)


def dinkelbach_exact(graph: ScenarioGraph, demand: DemandMatrix, n_rabs: int, max_hops: int,
                     params: EnergyParams, *, lam_tol: float = 1e-6, budget: int = JOINT_BUDGET,
                     max_iter: int = 100) -> SolverResult:
    """Global energy-efficiency optimum over all joint per-epoch deployments.

    The parametric problem ``max bits - lam * energy`` is solved by
    enumeration: per-epoch bits come from the flow LP of each subset, energy
    from the relocation chain of each joint tuple. ``lam`` is updated to the
    incumbent's ratio until the parametric optimum is within
    ``lam_tol * bits_scale`` of zero.
    """
    _validate(graph, demand, n_rabs, max_hops)
    start = time.perf_counter()
    V, T = graph.n_nodes - 1, demand.epochs
    per_epoch = sum(math.comb(V, k) for k in range(min(n_rabs, V) + 1))
    joint = per_epoch ** T
    if joint > budget and not (T <= 2 and V <= 10):
        raise OracleBudgetExceeded(f"{joint} joint deployments exceed the budget of {budget}")
    eta = params.epoch_duration
    options = [list(enumerate_deployments(graph, demand.epoch(t), n_rabs, max_hops, eta,
                                          budget=budget, include_empty=True)) for t in range(T)]
    bits_t = [np.array([d.served_bits for d in opt]) for opt in options]
    tuples = list(itertools.product(*[range(len(o)) for o in options]))
    bits = np.array([sum(bits_t[t][k] for t, k in enumerate(tup)) for tup in tuples])
    energy = np.array([
        plan_relocations([options[t][k].deployed for t, k in enumerate(tup)], graph.positions, params,
                         n_rabs, solver="hungarian").total_energy
        for tup in tuples
    ])
    scale = max(float(bits.max()), 1.0)
    lam = 0.0
    lams = [lam]
    best = 0
    for _ in range(max_iter):
        vals = bits - lam * energy
        k = int(np.argmax(vals))
        if vals[k] <= lam_tol * scale:
            break
        best = k
        lam = float(bits[k] / energy[k])
        lams.append(lam)
    else:
        raise RuntimeError("Dinkelbach iteration did not converge")
    deployments = [options[t][k] for t, k in enumerate(tuples[best])]
    res = finish("exact", graph, deployments, n_rabs, params, start, assignment="hungarian",
                 extras={"dinkelbach_lambdas": lams})
    return res
